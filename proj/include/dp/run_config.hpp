#pragma once

#include "dp/dataset.hpp"
#include "dp/trainer.hpp"

#include <filesystem>

namespace dp {

/// All sections of a run configuration. Plain-text `[section]` / `key = value`
/// files with strict unknown-key rejection; every run echoes its fully
/// resolved config beside the outputs.
struct RunConfig {
  // [dataset]
  DatasetConfig dataset;
  // [model]
  int model_blocks = 5;
  bool model_xyz_skip = true;
  bool model_extra_skips = false;
  PoolMode model_pooling = PoolMode::Mix;
  int model_points = 1024;
  // [train]
  TrainConfig train;
  std::filesystem::path train_manifest;  // dataset manifest consumed by train/eval/ablate
  // [eval]
  double eval_tau_cm = 1.0;
  std::filesystem::path eval_checkpoint;
  std::filesystem::path eval_out;
  // [ablate]
  bool ablate_full_block_set = false;

  /// Materializes the generator/discriminator configs from the model section
  /// into train.gen / train.disc.
  void resolve_model();

  static RunConfig defaults();
  static RunConfig parse_file(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;
};

}  // namespace dp
