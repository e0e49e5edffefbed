#pragma once

#include "dp/nn.hpp"

#include <utility>
#include <vector>

namespace dp {

enum class PoolMode { Max, Avg, Mix };

const char* pool_mode_name(PoolMode mode);
PoolMode pool_mode_from_name(const std::string& name);

/// Shared-MLP layer widths of one generator block.
struct BlockConfig {
  std::vector<int> mlp_widths;
};

struct GeneratorConfig {
  int num_points = 1024;
  std::vector<BlockConfig> blocks;
  /// 1-based (source, destination) pairs, source < destination. The source
  /// block's point-feature matrix is concatenated onto the destination
  /// block's input.
  std::vector<std::pair<int, int>> cross_block_skips;
  /// Concatenate the original xyz onto each block's MLP output (the
  /// block-internal skip). Disabled for the "w/o sc" ablation.
  bool block_xyz_skip = true;
  /// Final projection down to 3 coordinates; last layer linear.
  std::vector<int> final_mlp_widths{64, 3};

  void validate() const;

  /// Width schedules for the studied block counts (1, 2, 5, 7).
  /// extra_skips adds the (1,7),(2,6),(3,5) cross-block pairs (7-block only).
  static GeneratorConfig preset(int num_blocks, int num_points = 1024,
                                bool xyz_skip = true, bool extra_skips = false);

  /// Width of block i's point-feature matrix F (post xyz concat).
  int point_feature_width(int block_index) const;
  /// Input width of block i's shared MLP, including cross-block skips.
  int block_input_width(int block_index) const;
};

struct DiscriminatorConfig {
  std::vector<int> mlp_widths{64, 128, 256};
  PoolMode pooling = PoolMode::Mix;
  std::vector<int> fc_widths{256, 1};  // exactly two layers, scalar out

  void validate() const;
  int global_feature_width() const;  // per stream, after pooling
};

// Parameter registration. Generator params are prefixed "g.", discriminator
// params "d.", so both can share one store or live in separate ones.
void init_generator_params(ParamStore& store, const GeneratorConfig& cfg, Rng& rng);
void init_discriminator_params(ParamStore& store, const DiscriminatorConfig& cfg, Rng& rng);
std::size_t generator_param_count(const GeneratorConfig& cfg);
std::size_t discriminator_param_count(const DiscriminatorConfig& cfg);

/// One block: h = sharedMLP(f_in); f = [h | xyz] (point features);
/// g = maxpool(f); out = [f | broadcast(g)]. Returns out and, via
/// point_features, the f matrix used by cross-block skips.
Tensor deeppoint_block(Tape& tape, ParamStore& store, const std::string& prefix,
                       Tensor f_in, Tensor xyz, const BlockConfig& cfg, bool xyz_skip,
                       Tensor* point_features = nullptr);

/// Full generator on an already-normalized n x 3 input node. Output is n x 3
/// in the same frame.
Tensor generator_forward(Tape& tape, ParamStore& store, const GeneratorConfig& cfg,
                         Tensor xyz);

/// Convenience wrapper: run a fresh tape over a normalized cloud.
PointCloud generator_predict(ParamStore& store, const GeneratorConfig& cfg,
                             const PointCloud& normalized_input);

/// Two-stream discriminator score (1x1 node, no squashing). Both streams run
/// through one shared MLP; per-stream pooled features are concatenated and
/// fed to the two FC layers.
Tensor discriminator_forward(Tape& tape, ParamStore& store, const DiscriminatorConfig& cfg,
                             Tensor condition, Tensor candidate);

}  // namespace dp
