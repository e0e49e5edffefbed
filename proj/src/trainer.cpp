#include "dp/trainer.hpp"

#include "dp/metrics.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace dp {

void TrainConfig::validate() const {
  if (epochs < 1) throw InvalidConfig("train: epochs must be >= 1");
  if (batch_size < 1) throw InvalidConfig("train: batch_size must be >= 1");
  if (decay_start_epoch < 0 || decay_start_epoch > epochs)
    throw InvalidConfig("train: decay_start_epoch must be in [0, epochs]");
  if (!(base_lr >= 0)) throw InvalidConfig("train: base_lr must be >= 0");
  if (weights.lambda_cf < 0 || weights.lambda_emd < 0)
    throw InvalidConfig("train: loss weights must be >= 0");
  gen.validate();
  disc.validate();
}

double lr_at(int epoch, const TrainConfig& cfg) {
  if (epoch < 0 || epoch >= cfg.epochs)
    throw InvalidInput("lr_at: epoch " + std::to_string(epoch) + " outside 0.." +
                       std::to_string(cfg.epochs - 1));
  if (epoch < cfg.decay_start_epoch) return cfg.base_lr;
  return cfg.base_lr * static_cast<double>(cfg.epochs - epoch) /
         static_cast<double>(cfg.epochs - cfg.decay_start_epoch);
}

TrainLog::TrainLog(const std::filesystem::path& path, bool append)
    : stream_(path, append ? std::ios::app : std::ios::trunc) {
  if (!stream_) throw IoError("train log: cannot open '" + path.string() + "'");
  if (!append) stream_ << "# epoch step lr l_d l_g_adv cd emd wall_ms\n";
}

void TrainLog::record(const TrainLogRecord& r) {
  char buf[200];
  std::snprintf(buf, sizeof(buf), "%d %d %.9g %.9g %.9g %.9g %.9g %ld\n", r.epoch, r.step,
                r.lr, r.l_d, r.l_g_adv, r.cd, r.emd, r.wall_ms);
  stream_ << buf << std::flush;
  records_.push_back(r);
}

void TrainLog::event(const std::string& text) { stream_ << "# " << text << "\n" << std::flush; }

namespace {

struct NormalizedPair {
  PointCloud input;   // P_r in its unit frame
  PointCloud target;  // P_true expressed in the same frame
  Vec3 center;
  double scale = 1;
};

NormalizedPair normalize_pair(const SamplePair& s) {
  NormalizedPair out;
  NormalizedCloud norm = normalize(s.p_r);
  out.center = norm.center;
  out.scale = norm.scale;
  out.input = std::move(norm.cloud);
  out.target.points.reserve(s.p_true.size());
  for (const Vec3& p : s.p_true.points)
    out.target.points.push_back((p - out.center) / out.scale);
  return out;
}

}  // namespace

StepLosses train_step(std::span<const SamplePair> batch, ParamStore& gen_params,
                      ParamStore& disc_params, const TrainConfig& cfg, double lr) {
  if (batch.empty()) throw InvalidInput("train_step: empty batch");
  const double inv_b = 1.0 / static_cast<double>(batch.size());

  std::vector<NormalizedPair> pairs;
  pairs.reserve(batch.size());
  for (const SamplePair& s : batch) {
    if (s.p_r.size() != static_cast<std::size_t>(cfg.gen.num_points) ||
        s.p_true.size() != static_cast<std::size_t>(cfg.gen.num_points))
      throw SizeMismatch("train_step: sample '" + s.id + "' does not have " +
                         std::to_string(cfg.gen.num_points) + " points");
    pairs.push_back(normalize_pair(s));
  }

  StepLosses losses;

  // Discriminator phase. Fakes are detached: generated on a throwaway tape
  // and fed back in as constants, so no gradient reaches the generator.
  {
    Tape tape;
    Tensor total{};
    bool first = true;
    for (const NormalizedPair& p : pairs) {
      const PointCloud fake = generator_predict(gen_params, cfg.gen, p.input);
      const Tensor cond = tape.input(cloud_to_matrix(p.input));
      const Tensor real = tape.input(cloud_to_matrix(p.target));
      const Tensor fake_in = tape.input(cloud_to_matrix(fake));
      const Tensor s_real = discriminator_forward(tape, disc_params, cfg.disc, cond, real);
      const Tensor s_fake = discriminator_forward(tape, disc_params, cfg.disc, cond, fake_in);
      const Tensor l_d = lsgan_d_loss_node(tape, s_real, s_fake);
      total = first ? l_d : tape.add(total, l_d);
      first = false;
    }
    const Tensor mean_loss = tape.scale(total, inv_b);
    losses.l_d = tape.scalar_value(mean_loss);
    tape.backward(mean_loss);
    losses.clipped_d = disc_params.clip_grads(cfg.clip_norm);
    if (lr > 0)
      disc_params.adam_step(lr, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps);
    else
      disc_params.zero_grads();
  }

  // Generator phase against the frozen (just-updated) discriminator.
  {
    Tape tape;
    Tensor total{};
    bool first = true;
    double sum_adv = 0, sum_cd = 0, sum_emd = 0;
    for (const NormalizedPair& p : pairs) {
      const Tensor xyz = tape.input(cloud_to_matrix(p.input));
      const Tensor pred = generator_forward(tape, gen_params, cfg.gen, xyz);
      const Tensor cond = tape.input(cloud_to_matrix(p.input));
      const Tensor s_fake = discriminator_forward(tape, disc_params, cfg.disc, cond, pred);
      const Tensor l_adv = lsgan_g_adv_node(tape, s_fake);
      const Tensor cd = chamfer_loss_node(tape, pred, p.target);
      const Tensor emd = emd_loss_node(tape, pred, p.target, cfg.emd_exact_max_n);
      sum_adv += tape.scalar_value(l_adv);
      sum_cd += tape.scalar_value(cd);
      sum_emd += tape.scalar_value(emd);
      const Tensor l_g = generator_total_loss_node(tape, l_adv, cd, emd, cfg.weights);
      total = first ? l_g : tape.add(total, l_g);
      first = false;
    }
    const Tensor mean_loss = tape.scale(total, inv_b);
    tape.backward(mean_loss);
    losses.clipped_g = gen_params.clip_grads(cfg.clip_norm);
    if (lr > 0)
      gen_params.adam_step(lr, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps);
    else
      gen_params.zero_grads();
    // The adversarial path also deposited gradients on the discriminator.
    disc_params.zero_grads();
    losses.l_g_adv = sum_adv * inv_b;
    losses.cd = sum_cd * inv_b;
    losses.emd = sum_emd * inv_b;
  }
  return losses;
}

void check_generator_params(const ParamStore& store, const GeneratorConfig& cfg) {
  ParamStore expected;
  Rng rng(0);
  init_generator_params(expected, cfg, rng);
  for (const ParamStore::Entry& e : expected.entries()) {
    if (!store.has(e.name))
      throw ConfigMismatch("checkpoint lacks parameter '" + e.name +
                           "' required by the model config");
    const ParamStore::Entry& got = store.entry(store.index_of(e.name));
    if (!got.value.same_shape(e.value))
      throw ConfigMismatch("checkpoint parameter '" + e.name + "' has shape " +
                           std::to_string(got.value.rows) + "x" +
                           std::to_string(got.value.cols) + ", config expects " +
                           std::to_string(e.value.rows) + "x" + std::to_string(e.value.cols));
  }
}

MetricsReport evaluate(ParamStore& gen_params, const GeneratorConfig& cfg,
                       std::span<const SamplePair> split, double tau_cm,
                       std::size_t emd_exact_max_n) {
  if (split.empty()) throw InvalidInput("evaluate: empty split");
  check_generator_params(gen_params, cfg);
  MetricsReport report;
  report.tau_cm = tau_cm;
  for (const SamplePair& s : split) {
    const NormalizedPair p = normalize_pair(s);
    const PointCloud pred_norm = generator_predict(gen_params, cfg, p.input);
    const PointCloud pred = denormalize(pred_norm, p.center, p.scale);
    SampleMetrics m;
    m.id = s.id;
    m.cd_cm = chamfer(pred, s.p_true);
    m.emd_cm = emd_match(pred, s.p_true, emd_exact_max_n).mean_cost;
    m.fscore = fscore(pred, s.p_true, tau_cm);
    report.samples.push_back(std::move(m));
  }
  return report;
}

namespace {

std::filesystem::path ckpt_path(const std::filesystem::path& dir, int epoch,
                                const char* which) {
  char name[64];
  std::snprintf(name, sizeof(name), "ckpt_e%05d.%s.dpck", epoch, which);
  return dir / name;
}

/// Latest epoch having both checkpoint files, or -1.
int latest_checkpoint_epoch(const std::filesystem::path& dir, int max_epoch) {
  for (int e = max_epoch; e >= 0; --e)
    if (std::filesystem::exists(ckpt_path(dir, e, "gen")) &&
        std::filesystem::exists(ckpt_path(dir, e, "disc")))
      return e;
  return -1;
}

}  // namespace

TrainResult train(const TrainConfig& cfg, std::span<const SamplePair> train_split,
                  std::span<const SamplePair> test_split, bool resume) {
  cfg.validate();
  if (train_split.empty()) throw InvalidInput("train: empty train split");
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(cfg.out_dir, ec);
  if (!fs::is_directory(cfg.out_dir))
    throw IoError("train: cannot create output directory '" + cfg.out_dir.string() + "'");

  ParamStore gen_params, disc_params;
  int start_epoch = 0;
  if (resume) {
    const int e = latest_checkpoint_epoch(cfg.out_dir, cfg.epochs - 1);
    if (e < 0) throw IoError("train: resume requested but no checkpoint pair found in '" +
                             cfg.out_dir.string() + "'");
    gen_params = ParamStore::load(ckpt_path(cfg.out_dir, e, "gen"));
    disc_params = ParamStore::load(ckpt_path(cfg.out_dir, e, "disc"));
    check_generator_params(gen_params, cfg.gen);
    start_epoch = e + 1;
  } else {
    Rng init_rng = Rng(cfg.seed).child(1);
    init_generator_params(gen_params, cfg.gen, init_rng);
    init_discriminator_params(disc_params, cfg.disc, init_rng);
  }

  TrainLog log(cfg.out_dir / "train.log", /*append=*/resume);
  const Rng shuffle_master = Rng(cfg.seed).child(2);

  std::vector<std::size_t> order(train_split.size());
  const int steps_per_epoch =
      static_cast<int>((train_split.size() + cfg.batch_size - 1) / cfg.batch_size);
  int global_step = start_epoch * steps_per_epoch;

  const auto t0 = std::chrono::steady_clock::now();
  for (int epoch = start_epoch; epoch < cfg.epochs; ++epoch) {
    const double lr = lr_at(epoch, cfg);
    // Fisher-Yates shuffle from a per-epoch child stream.
    Rng shuffle_rng = shuffle_master.child(static_cast<std::uint64_t>(epoch));
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[shuffle_rng.uniform_index(i)]);

    for (std::size_t ofs = 0; ofs < order.size(); ofs += cfg.batch_size) {
      const std::size_t end = std::min(ofs + cfg.batch_size, order.size());
      std::vector<SamplePair> batch;
      batch.reserve(end - ofs);
      for (std::size_t i = ofs; i < end; ++i)
        batch.push_back(train_split[order[i]]);

      StepLosses losses;
      try {
        losses = train_step(batch, gen_params, disc_params, cfg, lr);
      } catch (const NumericalError& err) {
        std::string ids;
        for (const SamplePair& s : batch) ids += s.id + " ";
        log.event("numerical failure at epoch " + std::to_string(epoch) + " step " +
                  std::to_string(global_step) + " batch [" + ids + "]: " + err.what());
        throw;
      }
      if (losses.clipped_d)
        log.event("clip d epoch " + std::to_string(epoch) + " step " +
                  std::to_string(global_step));
      if (losses.clipped_g)
        log.event("clip g epoch " + std::to_string(epoch) + " step " +
                  std::to_string(global_step));

      TrainLogRecord rec;
      rec.epoch = epoch;
      rec.step = global_step++;
      rec.lr = lr;
      rec.l_d = losses.l_d;
      rec.l_g_adv = losses.l_g_adv;
      rec.cd = losses.cd;
      rec.emd = losses.emd;
      rec.wall_ms = static_cast<long>(std::chrono::duration_cast<std::chrono::milliseconds>(
                                          std::chrono::steady_clock::now() - t0)
                                          .count());
      log.record(rec);
    }

    const bool last = epoch + 1 == cfg.epochs;
    if (last || (cfg.checkpoint_every > 0 && (epoch + 1) % cfg.checkpoint_every == 0)) {
      gen_params.save(ckpt_path(cfg.out_dir, epoch, "gen"));
      disc_params.save(ckpt_path(cfg.out_dir, epoch, "disc"));
    }
  }

  TrainResult result;
  result.steps_run = global_step;
  result.gen_checkpoint = ckpt_path(cfg.out_dir, cfg.epochs - 1, "gen");
  result.disc_checkpoint = ckpt_path(cfg.out_dir, cfg.epochs - 1, "disc");
  if (!test_split.empty()) {
    result.final_eval =
        evaluate(gen_params, cfg.gen, test_split, cfg.eval_tau_cm, cfg.emd_exact_max_n);
    const Aggregate c = result.final_eval.cd(), e = result.final_eval.emd(),
                    f = result.final_eval.fscore();
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "final eval: cd %.4f +- %.4f cm, emd %.4f +- %.4f cm, f %.4f +- %.4f",
                  c.avg, c.std_dev, e.avg, e.std_dev, f.avg, f.std_dev);
    log.event(buf);
    result.final_eval.save(cfg.out_dir / "eval_final.txt", cfg.out_dir / "eval_final.csv");
  }
  return result;
}

// --- Ablations ---------------------------------------------------------------

namespace {

constexpr ReferenceRow kBlockRows[] = {
    {"1-Block, w/o sc", 10.10, 4.49, 5.01, 4.24, 0.0840, 0.0340},
    {"1-Block", 9.75, 4.00, 4.56, 3.96, 0.0847, 0.0344},
    {"2-Block", 9.40, 4.70, 4.83, 4.84, 0.0940, 0.0422},
    {"5-Block", 7.79, 4.37, 4.40, 4.49, 0.1310, 0.0597},
    {"7-Block", 7.68, 4.15, 4.53, 4.19, 0.1323, 0.0634},
    {"7-Block + 3sc", 9.13, 4.55, 4.66, 3.88, 0.1070, 0.0490},
};

constexpr ReferenceRow kPoolingRows[] = {
    {"mix pooling", 9.75, 4.00, 4.56, 3.96, 0.0847, 0.0344},
    {"max pooling", 10.52, 4.80, 4.79, 4.33, 0.0729, 0.0271},
    {"avg pooling", 10.28, 4.11, 4.60, 4.11, 0.0771, 0.0318},
};

}  // namespace

std::span<const ReferenceRow> reference_block_rows() { return kBlockRows; }
std::span<const ReferenceRow> reference_pooling_rows() { return kPoolingRows; }

std::vector<AblationVariant> block_count_variants(const TrainConfig& base, bool full_set) {
  std::vector<AblationVariant> out;
  const int n = base.gen.num_points;
  if (full_set)
    out.push_back({"1-Block, w/o sc", GeneratorConfig::preset(1, n, /*xyz_skip=*/false),
                   base.disc});
  for (int blocks : {1, 2, 5, 7})
    out.push_back({std::to_string(blocks) + "-Block", GeneratorConfig::preset(blocks, n),
                   base.disc});
  if (full_set)
    out.push_back({"7-Block + 3sc",
                   GeneratorConfig::preset(7, n, /*xyz_skip=*/true, /*extra_skips=*/true),
                   base.disc});
  return out;
}

std::vector<AblationVariant> pooling_variants(const TrainConfig& base) {
  std::vector<AblationVariant> out;
  for (PoolMode mode : {PoolMode::Mix, PoolMode::Max, PoolMode::Avg}) {
    DiscriminatorConfig d = base.disc;
    d.pooling = mode;
    out.push_back({std::string(pool_mode_name(mode)) + " pooling", base.gen, d});
  }
  return out;
}

std::vector<AblationRow> ablation_sweep(const TrainConfig& base,
                                        std::span<const AblationVariant> variants,
                                        std::span<const SamplePair> train_split,
                                        std::span<const SamplePair> test_split) {
  std::vector<AblationRow> rows;
  for (const AblationVariant& variant : variants) {
    TrainConfig cfg = base;
    cfg.gen = variant.gen;
    cfg.disc = variant.disc;
    std::string dir_name = "var_" + variant.name;
    for (char& c : dir_name)
      if (c == ' ' || c == ',' || c == '/' || c == '+') c = '_';
    cfg.out_dir = base.out_dir / dir_name;
    const TrainResult result = train(cfg, train_split, test_split);
    rows.push_back({variant.name, result.final_eval});
  }
  return rows;
}

std::string ablation_table(std::span<const AblationRow> rows,
                           std::span<const ReferenceRow> refs, const std::string& title) {
  std::ostringstream os;
  char buf[240];
  os << "# " << title << "\n";
  os << "# measured on the local synthetic dataset; 'ref' columns are the\n"
        "# published radar-dataset results, shown as non-binding context\n";
  std::snprintf(buf, sizeof(buf), "%-18s %21s %21s %21s  %s\n", "variant",
                "CD avg/std", "EMD avg/std", "F avg/std", "ref CD | EMD | F");
  os << buf;
  for (const AblationRow& row : rows) {
    const Aggregate c = row.report.cd(), e = row.report.emd(), f = row.report.fscore();
    const ReferenceRow* ref = nullptr;
    for (const ReferenceRow& r : refs)
      if (row.name == r.name) ref = &r;
    if (ref) {
      std::snprintf(buf, sizeof(buf),
                    "%-18s %10.3f/%-10.3f %10.3f/%-10.3f %10.4f/%-10.4f  "
                    "%.2f/%.2f | %.2f/%.2f | %.4f/%.4f\n",
                    row.name.c_str(), c.avg, c.std_dev, e.avg, e.std_dev, f.avg, f.std_dev,
                    ref->cd_avg, ref->cd_std, ref->emd_avg, ref->emd_std, ref->f_avg,
                    ref->f_std);
    } else {
      std::snprintf(buf, sizeof(buf), "%-18s %10.3f/%-10.3f %10.3f/%-10.3f %10.4f/%-10.4f  -\n",
                    row.name.c_str(), c.avg, c.std_dev, e.avg, e.std_dev, f.avg, f.std_dev);
    }
    os << buf;
  }
  return os.str();
}

}  // namespace dp
