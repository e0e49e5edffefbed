#include "dp/run_config.hpp"

#include "dp/metrics.hpp"
#include "dp/ply.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

namespace {

using namespace dp;

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<double> tau;
  bool force = false;
  bool resume = false;
};

RunConfig load_config(const std::string& path, const Overrides& ov) {
  RunConfig cfg = RunConfig::parse_file(path);
  if (ov.seed) {
    cfg.dataset.seed = *ov.seed;
    cfg.train.seed = *ov.seed;
  }
  if (ov.tau) {
    cfg.eval_tau_cm = *ov.tau;
    cfg.train.eval_tau_cm = *ov.tau;
  }
  cfg.dataset.force = ov.force;
  return cfg;
}

int cmd_synth(const std::string& config_path, const Overrides& ov) {
  RunConfig cfg = load_config(config_path, ov);
  if (ov.out) cfg.dataset.out_dir = *ov.out;
  const DatasetManifest manifest = build_dataset(cfg.dataset);
  cfg.save(cfg.dataset.out_dir / "config.resolved.cfg");
  std::printf("%d samples (%d models x %d), split %d/%d\n", cfg.dataset.total(),
              cfg.dataset.num_models, cfg.dataset.per_model, cfg.dataset.train_total(),
              cfg.dataset.test_total);
  std::printf("dataset written to %s (%zu manifest entries)\n",
              cfg.dataset.out_dir.string().c_str(), manifest.entries.size());
  return 0;
}

int cmd_train(const std::string& config_path, const Overrides& ov) {
  RunConfig cfg = load_config(config_path, ov);
  if (ov.out) cfg.train.out_dir = *ov.out;
  if (cfg.train_manifest.empty())
    throw InvalidConfig("train: no dataset manifest configured ([train] manifest)");
  const DatasetManifest manifest = DatasetManifest::load(cfg.train_manifest);
  const auto train_split = load_split(manifest, "train", cfg.model_points);
  const auto test_split = load_split(manifest, "test", cfg.model_points);
  std::filesystem::create_directories(cfg.train.out_dir);
  cfg.save(cfg.train.out_dir / "config.resolved.cfg");
  const TrainResult result = train(cfg.train, train_split, test_split, ov.resume);
  std::printf("trained %d steps; final checkpoint %s\n", result.steps_run,
              result.gen_checkpoint.string().c_str());
  if (!test_split.empty()) std::fputs(result.final_eval.to_table("test split").c_str(), stdout);
  return 0;
}

int cmd_eval(const std::string& config_path, const Overrides& ov,
             const std::string& checkpoint_flag) {
  RunConfig cfg = load_config(config_path, ov);
  if (!checkpoint_flag.empty()) cfg.eval_checkpoint = checkpoint_flag;
  if (cfg.eval_checkpoint.empty())
    throw InvalidConfig("eval: no checkpoint configured ([eval] checkpoint)");
  if (cfg.train_manifest.empty())
    throw InvalidConfig("eval: no dataset manifest configured ([train] manifest)");
  ParamStore gen_params = ParamStore::load(cfg.eval_checkpoint);
  const DatasetManifest manifest = DatasetManifest::load(cfg.train_manifest);
  const auto test_split = load_split(manifest, "test", cfg.model_points);
  MetricsReport report = evaluate(gen_params, cfg.train.gen, test_split, cfg.eval_tau_cm,
                                  cfg.train.emd_exact_max_n);
  std::filesystem::path out_dir = ov.out ? std::filesystem::path(*ov.out)
                                         : (cfg.eval_out.empty() ? "." : cfg.eval_out);
  std::filesystem::create_directories(out_dir);
  cfg.save(out_dir / "config.resolved.cfg");
  report.save(out_dir / "eval.txt", out_dir / "eval.csv");
  std::fputs(report.to_table("test split").c_str(), stdout);
  return 0;
}

int cmd_infer(const std::string& config_path, const Overrides& ov,
              const std::string& checkpoint_flag, const std::vector<std::string>& inputs,
              const std::string& truth_path) {
  RunConfig cfg = load_config(config_path, ov);
  if (!checkpoint_flag.empty()) cfg.eval_checkpoint = checkpoint_flag;
  if (cfg.eval_checkpoint.empty())
    throw InvalidConfig("infer: no checkpoint given (--checkpoint or [eval] checkpoint)");
  if (inputs.empty()) throw InvalidConfig("infer: no input files");

  ParamStore gen_params = ParamStore::load(cfg.eval_checkpoint);
  check_generator_params(gen_params, cfg.train.gen);
  const std::size_t n = static_cast<std::size_t>(cfg.model_points);

  Rng rng(cfg.train.seed);
  PointCloud coarse;
  if (inputs.size() == 1 && inputs[0].ends_with(".ply")) {
    coarse = read_ply(inputs[0]);
    if (coarse.size() != n) coarse = resample(coarse, n, rng);
  } else {
    std::vector<PointCloud> views;
    for (const std::string& f : inputs) {
      if (!f.ends_with(".dimg"))
        throw InvalidConfig("infer: expected one .ply or a set of .dimg files, got '" + f +
                            "'");
      views.push_back(backproject(read_dimg(f)));
    }
    coarse = fuse_views(views, n, rng);
  }

  const NormalizedCloud norm = normalize(coarse);
  const PointCloud pred_norm = generator_predict(gen_params, cfg.train.gen, norm.cloud);
  const PointCloud pred = denormalize(pred_norm, norm.center, norm.scale);

  const std::filesystem::path out_path = ov.out ? *ov.out : std::string("pred.ply");
  write_ply(out_path, pred);
  std::printf("wrote %zu points to %s\n", pred.size(), out_path.string().c_str());

  if (!truth_path.empty()) {
    PointCloud truth = read_ply(truth_path);
    if (truth.size() != n) {
      Rng truth_rng = rng.child(7);
      truth = resample(truth, n, truth_rng);
    }
    const double cd = chamfer(pred, truth);
    const double emd = emd_match(pred, truth, cfg.train.emd_exact_max_n).mean_cost;
    const double f = fscore(pred, truth, cfg.eval_tau_cm);
    std::printf("cd %.4f cm, emd %.4f cm, f-score %.4f (tau %.2f cm)\n", cd, emd, f,
                cfg.eval_tau_cm);
  }
  return 0;
}

int cmd_ablate(const std::string& config_path, const Overrides& ov,
               const std::string& which) {
  RunConfig cfg = load_config(config_path, ov);
  if (ov.out) cfg.train.out_dir = *ov.out;
  if (cfg.train_manifest.empty())
    throw InvalidConfig("ablate: no dataset manifest configured ([train] manifest)");
  const DatasetManifest manifest = DatasetManifest::load(cfg.train_manifest);
  const auto train_split = load_split(manifest, "train", cfg.model_points);
  const auto test_split = load_split(manifest, "test", cfg.model_points);
  std::filesystem::create_directories(cfg.train.out_dir);
  cfg.save(cfg.train.out_dir / "config.resolved.cfg");

  std::string tables;
  if (which == "blocks" || which == "all") {
    const auto variants = block_count_variants(cfg.train, cfg.ablate_full_block_set);
    const auto rows = ablation_sweep(cfg.train, variants, train_split, test_split);
    tables += ablation_table(rows, reference_block_rows(), "generator depth sweep");
  }
  if (which == "pooling" || which == "all") {
    const auto variants = pooling_variants(cfg.train);
    const auto rows = ablation_sweep(cfg.train, variants, train_split, test_split);
    tables += ablation_table(rows, reference_pooling_rows(), "discriminator pooling sweep");
  }
  if (tables.empty())
    throw InvalidConfig("ablate: unknown sweep '" + which + "' (want blocks|pooling|all)");
  std::fputs(tables.c_str(), stdout);
  std::ofstream out(cfg.train.out_dir / "ablation.txt", std::ios::trunc);
  out << tables;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"point-cloud reconstruction pipeline: synthetic data, GAN training, metrics"};
  app.require_subcommand(1);

  std::string config_path, checkpoint, truth, sweep = "all", out_flag;
  std::vector<std::string> inputs;
  Overrides ov;
  std::uint64_t seed_flag = 0;
  double tau_flag = 0;

  const auto add_common = [&](CLI::App* sub, bool needs_config = true) {
    auto* opt = sub->add_option("--config", config_path, "run configuration file");
    if (needs_config) opt->required();
    sub->add_option("--seed", seed_flag, "override dataset/train seed")
        ->each([&](const std::string&) { ov.seed = seed_flag; });
    sub->add_option("--out", out_flag, "override output path")
        ->each([&](const std::string&) { ov.out = out_flag; });
  };

  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  add_common(synth);
  synth->add_flag("--force", ov.force, "overwrite an existing dataset directory");

  CLI::App* train = app.add_subcommand("train", "train generator + discriminator");
  add_common(train);
  train->add_flag("--resume", ov.resume, "continue from the latest checkpoint");

  CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint on the test split");
  add_common(eval);
  eval->add_option("--checkpoint", checkpoint, "generator checkpoint (.dpck)");
  eval->add_option("--tau", tau_flag, "F-score threshold in cm")
      ->each([&](const std::string&) { ov.tau = tau_flag; });

  CLI::App* infer = app.add_subcommand("infer", "reconstruct one cloud");
  add_common(infer);
  infer->add_option("--checkpoint", checkpoint, "generator checkpoint (.dpck)");
  infer->add_option("--truth", truth, "ground-truth .ply for metric echo");
  infer->add_option("--tau", tau_flag, "F-score threshold in cm")
      ->each([&](const std::string&) { ov.tau = tau_flag; });
  infer->add_option("inputs", inputs, "coarse .ply or k .dimg files")->required();

  CLI::App* ablate = app.add_subcommand("ablate", "train and tabulate ablation variants");
  add_common(ablate);
  ablate->add_option("--sweep", sweep, "blocks|pooling|all");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (synth->parsed()) return cmd_synth(config_path, ov);
    if (train->parsed()) return cmd_train(config_path, ov);
    if (eval->parsed()) return cmd_eval(config_path, ov, checkpoint);
    if (infer->parsed()) return cmd_infer(config_path, ov, checkpoint, inputs, truth);
    if (ablate->parsed()) return cmd_ablate(config_path, ov, sweep);
  } catch (const InvalidConfig& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const ConfigMismatch& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 3;
  } catch (const dp::ParseError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 3;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 4;
  } catch (const ApproxFailure& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 4;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
