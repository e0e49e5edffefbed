#include "dp/run_config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace dp {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  const auto e = s.find_last_not_of(" \t");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

double to_double(const std::string& v, const std::string& key) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw InvalidConfig("config: bad numeric value '" + v + "' for key '" + key + "'");
  }
}

long to_long(const std::string& v, const std::string& key) {
  try {
    std::size_t used = 0;
    const long d = std::stol(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw InvalidConfig("config: bad integer value '" + v + "' for key '" + key + "'");
  }
}

bool to_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw InvalidConfig("config: bad boolean value '" + v + "' for key '" + key + "'");
}

using Setter = std::function<void(RunConfig&, const std::string&, const std::string&)>;

const std::map<std::string, std::map<std::string, Setter>>& schema() {
  static const std::map<std::string, std::map<std::string, Setter>> s = [] {
    std::map<std::string, std::map<std::string, Setter>> m;
    auto& ds = m["dataset"];
    ds["out"] = [](RunConfig& c, const std::string&, const std::string& v) {
      c.dataset.out_dir = v;
    };
    ds["models"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.dataset.num_models = static_cast<int>(to_long(v, k));
    };
    ds["per_model"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.dataset.per_model = static_cast<int>(to_long(v, k));
    };
    ds["test_total"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.dataset.test_total = static_cast<int>(to_long(v, k));
    };
    ds["views"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.dataset.num_views = static_cast<int>(to_long(v, k));
    };
    ds["points"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.dataset.num_points = static_cast<int>(to_long(v, k));
    };
    ds["render_points"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.dataset.render_points = static_cast<int>(to_long(v, k));
    };
    ds["image_size"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.dataset.image_size = static_cast<int>(to_long(v, k));
    };
    ds["focal_px"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.dataset.focal_px = to_double(v, k);
    };
    ds["view_range_cm"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.dataset.view_range_cm = to_double(v, k);
    };
    ds["view_elevation_deg"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.dataset.view_elevation_deg = to_double(v, k);
    };
    ds["max_range_cm"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.dataset.max_range_cm = to_double(v, k);
    };
    ds["seed"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.dataset.seed = static_cast<std::uint64_t>(to_long(v, k));
    };

    auto& co = m["corruption"];
    co["dropout"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.dataset.corruption.dropout = to_double(v, k);
    };
    co["ghost"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.dataset.corruption.ghost = to_double(v, k);
    };
    co["ghost_delta_cm"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.dataset.corruption.ghost_delta_cm = to_double(v, k);
    };
    co["sigma_cm"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.dataset.corruption.sigma_cm = to_double(v, k);
    };
    co["quant_step_cm"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.dataset.corruption.quant_step_cm = to_double(v, k);
    };

    auto& mo = m["model"];
    mo["blocks"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.model_blocks = static_cast<int>(to_long(v, k));
    };
    mo["xyz_skip"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.model_xyz_skip = to_bool(v, k);
    };
    mo["extra_skips"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.model_extra_skips = to_bool(v, k);
    };
    mo["pooling"] = [](RunConfig& c, const std::string&, const std::string& v) {
      c.model_pooling = pool_mode_from_name(v);
    };
    mo["points"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.model_points = static_cast<int>(to_long(v, k));
    };

    auto& tr = m["train"];
    tr["epochs"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.train.epochs = static_cast<int>(to_long(v, k));
    };
    tr["batch_size"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.train.batch_size = static_cast<int>(to_long(v, k));
    };
    tr["base_lr"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.train.base_lr = to_double(v, k);
    };
    tr["decay_start_epoch"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.train.decay_start_epoch = static_cast<int>(to_long(v, k));
    };
    tr["lambda_cf"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.train.weights.lambda_cf = to_double(v, k);
    };
    tr["lambda_emd"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.train.weights.lambda_emd = to_double(v, k);
    };
    tr["seed"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.train.seed = static_cast<std::uint64_t>(to_long(v, k));
    };
    tr["checkpoint_every"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.train.checkpoint_every = static_cast<int>(to_long(v, k));
    };
    tr["out"] = [](RunConfig& c, const std::string&, const std::string& v) {
      c.train.out_dir = v;
    };
    tr["manifest"] = [](RunConfig& c, const std::string&, const std::string& v) {
      c.train_manifest = v;
    };
    tr["adam_beta1"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.train.adam_beta1 = to_double(v, k);
    };
    tr["adam_beta2"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.train.adam_beta2 = to_double(v, k);
    };
    tr["clip_norm"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.train.clip_norm = to_double(v, k);
    };
    tr["emd_exact_max_n"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.train.emd_exact_max_n = static_cast<std::size_t>(to_long(v, k));
    };

    auto& ev = m["eval"];
    ev["tau_cm"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.eval_tau_cm = to_double(v, k);
    };
    ev["checkpoint"] = [](RunConfig& c, const std::string&, const std::string& v) {
      c.eval_checkpoint = v;
    };
    ev["out"] = [](RunConfig& c, const std::string&, const std::string& v) {
      c.eval_out = v;
    };

    auto& ab = m["ablate"];
    ab["full_block_set"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.ablate_full_block_set = to_bool(v, k);
    };
    return m;
  }();
  return s;
}

}  // namespace

void RunConfig::resolve_model() {
  train.gen = GeneratorConfig::preset(model_blocks, model_points, model_xyz_skip,
                                      model_extra_skips);
  train.disc.pooling = model_pooling;
  train.eval_tau_cm = eval_tau_cm;
}

RunConfig RunConfig::defaults() {
  RunConfig c;
  c.resolve_model();
  return c;
}

RunConfig RunConfig::parse_file(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("config: cannot open '" + path.string() + "'");
  RunConfig cfg;
  std::string line, section;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']')
        throw InvalidConfig(path.string() + ":" + std::to_string(line_no) +
                            ": malformed section header");
      section = t.substr(1, t.size() - 2);
      if (schema().count(section) == 0)
        throw InvalidConfig(path.string() + ":" + std::to_string(line_no) +
                            ": unknown section '" + section + "'");
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw InvalidConfig(path.string() + ":" + std::to_string(line_no) +
                          ": expected 'key = value'");
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (section.empty())
      throw InvalidConfig(path.string() + ":" + std::to_string(line_no) +
                          ": key '" + key + "' outside any section");
    const auto& keys = schema().at(section);
    const auto it = keys.find(key);
    if (it == keys.end())
      throw InvalidConfig(path.string() + ":" + std::to_string(line_no) +
                          ": unknown key '" + key + "' in section [" + section + "]");
    it->second(cfg, key, value);
  }
  cfg.resolve_model();
  return cfg;
}

void RunConfig::save(const std::filesystem::path& path) const {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("config: cannot open '" + path.string() + "' for writing");
  char buf[256];
  os << "[dataset]\n";
  os << "out = " << dataset.out_dir.string() << "\n";
  os << "models = " << dataset.num_models << "\n";
  os << "per_model = " << dataset.per_model << "\n";
  os << "test_total = " << dataset.test_total << "\n";
  os << "views = " << dataset.num_views << "\n";
  os << "points = " << dataset.num_points << "\n";
  os << "render_points = " << dataset.render_points << "\n";
  os << "image_size = " << dataset.image_size << "\n";
  std::snprintf(buf, sizeof(buf),
                "focal_px = %.9g\nview_range_cm = %.9g\nview_elevation_deg = %.9g\n"
                "max_range_cm = %.9g\n",
                dataset.focal_px, dataset.view_range_cm, dataset.view_elevation_deg,
                dataset.max_range_cm);
  os << buf;
  os << "seed = " << dataset.seed << "\n\n";

  os << "[corruption]\n";
  std::snprintf(buf, sizeof(buf),
                "dropout = %.9g\nghost = %.9g\nghost_delta_cm = %.9g\nsigma_cm = %.9g\n"
                "quant_step_cm = %.9g\n\n",
                dataset.corruption.dropout, dataset.corruption.ghost,
                dataset.corruption.ghost_delta_cm, dataset.corruption.sigma_cm,
                dataset.corruption.quant_step_cm);
  os << buf;

  os << "[model]\n";
  os << "blocks = " << model_blocks << "\n";
  os << "xyz_skip = " << (model_xyz_skip ? "true" : "false") << "\n";
  os << "extra_skips = " << (model_extra_skips ? "true" : "false") << "\n";
  os << "pooling = " << pool_mode_name(model_pooling) << "\n";
  os << "points = " << model_points << "\n\n";

  os << "[train]\n";
  os << "epochs = " << train.epochs << "\n";
  os << "batch_size = " << train.batch_size << "\n";
  std::snprintf(buf, sizeof(buf), "base_lr = %.9g\n", train.base_lr);
  os << buf;
  os << "decay_start_epoch = " << train.decay_start_epoch << "\n";
  std::snprintf(buf, sizeof(buf), "lambda_cf = %.9g\nlambda_emd = %.9g\n",
                train.weights.lambda_cf, train.weights.lambda_emd);
  os << buf;
  os << "seed = " << train.seed << "\n";
  os << "checkpoint_every = " << train.checkpoint_every << "\n";
  os << "out = " << train.out_dir.string() << "\n";
  os << "manifest = " << train_manifest.string() << "\n";
  std::snprintf(buf, sizeof(buf), "adam_beta1 = %.9g\nadam_beta2 = %.9g\nclip_norm = %.9g\n",
                train.adam_beta1, train.adam_beta2, train.clip_norm);
  os << buf;
  os << "emd_exact_max_n = " << train.emd_exact_max_n << "\n\n";

  os << "[eval]\n";
  std::snprintf(buf, sizeof(buf), "tau_cm = %.9g\n", eval_tau_cm);
  os << buf;
  os << "checkpoint = " << eval_checkpoint.string() << "\n";
  os << "out = " << eval_out.string() << "\n\n";

  os << "[ablate]\n";
  os << "full_block_set = " << (ablate_full_block_set ? "true" : "false") << "\n";
  if (!os) throw IoError("config: write failed for '" + path.string() + "'");
}

}  // namespace dp
