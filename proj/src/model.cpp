#include "dp/model.hpp"

#include <algorithm>

namespace dp {

const char* pool_mode_name(PoolMode mode) {
  switch (mode) {
    case PoolMode::Max: return "max";
    case PoolMode::Avg: return "avg";
    case PoolMode::Mix: return "mix";
  }
  return "?";
}

PoolMode pool_mode_from_name(const std::string& name) {
  if (name == "max") return PoolMode::Max;
  if (name == "avg") return PoolMode::Avg;
  if (name == "mix") return PoolMode::Mix;
  throw InvalidConfig("unknown pooling mode '" + name + "' (want max|avg|mix)");
}

void GeneratorConfig::validate() const {
  if (num_points < 1) throw InvalidConfig("generator: num_points must be >= 1");
  if (blocks.empty()) throw InvalidConfig("generator: need at least one block");
  for (const BlockConfig& b : blocks) {
    if (b.mlp_widths.empty()) throw InvalidConfig("generator: block with empty MLP");
    for (int w : b.mlp_widths)
      if (w < 1) throw InvalidConfig("generator: block MLP width must be >= 1");
  }
  const int n_blocks = static_cast<int>(blocks.size());
  for (const auto& [src, dst] : cross_block_skips) {
    if (src < 1 || dst < 1 || src > n_blocks || dst > n_blocks)
      throw InvalidConfig("generator: skip references a block outside 1.." +
                          std::to_string(n_blocks));
    if (src >= dst) throw InvalidConfig("generator: skip source must precede destination");
  }
  if (final_mlp_widths.empty() || final_mlp_widths.back() != 3)
    throw InvalidConfig("generator: final projection must end at dimension 3");
}

int GeneratorConfig::point_feature_width(int block_index) const {
  const int m = blocks[static_cast<std::size_t>(block_index)].mlp_widths.back();
  return m + (block_xyz_skip ? 3 : 0);
}

int GeneratorConfig::block_input_width(int block_index) const {
  int w = block_index == 0 ? 3 : 2 * point_feature_width(block_index - 1);
  for (const auto& [src, dst] : cross_block_skips)
    if (dst - 1 == block_index) w += point_feature_width(src - 1);
  return w;
}

GeneratorConfig GeneratorConfig::preset(int num_blocks, int num_points, bool xyz_skip,
                                        bool extra_skips) {
  GeneratorConfig cfg;
  cfg.num_points = num_points;
  cfg.block_xyz_skip = xyz_skip;
  std::vector<int> widths;
  switch (num_blocks) {
    case 1: widths = {128}; break;
    case 2: widths = {128, 256}; break;
    case 5: widths = {64, 128, 256, 128, 64}; break;
    case 7: widths = {64, 128, 256, 512, 256, 128, 64}; break;
    default:
      throw InvalidConfig("generator preset: unsupported block count " +
                          std::to_string(num_blocks) + " (want 1, 2, 5 or 7)");
  }
  for (int w : widths) cfg.blocks.push_back(BlockConfig{{w}});
  if (extra_skips) {
    if (num_blocks != 7)
      throw InvalidConfig("generator preset: extra skip connections need 7 blocks");
    cfg.cross_block_skips = {{1, 7}, {2, 6}, {3, 5}};
  }
  cfg.validate();
  return cfg;
}

void DiscriminatorConfig::validate() const {
  if (mlp_widths.empty()) throw InvalidConfig("discriminator: empty shared MLP");
  for (int w : mlp_widths)
    if (w < 1) throw InvalidConfig("discriminator: MLP width must be >= 1");
  if (fc_widths.size() != 2 || fc_widths.back() != 1)
    throw InvalidConfig("discriminator: exactly two FC layers ending at a scalar");
  if (fc_widths[0] < 1) throw InvalidConfig("discriminator: FC width must be >= 1");
}

int DiscriminatorConfig::global_feature_width() const {
  const int d = mlp_widths.back();
  return pooling == PoolMode::Mix ? 2 * d : d;
}

void init_generator_params(ParamStore& store, const GeneratorConfig& cfg, Rng& rng) {
  cfg.validate();
  for (std::size_t i = 0; i < cfg.blocks.size(); ++i)
    register_mlp(store, "g.block" + std::to_string(i) + ".mlp",
                 cfg.block_input_width(static_cast<int>(i)), cfg.blocks[i].mlp_widths, rng);
  const int last = static_cast<int>(cfg.blocks.size()) - 1;
  register_mlp(store, "g.final", 2 * cfg.point_feature_width(last), cfg.final_mlp_widths,
               rng);
}

void init_discriminator_params(ParamStore& store, const DiscriminatorConfig& cfg, Rng& rng) {
  cfg.validate();
  register_mlp(store, "d.mlp", 3, cfg.mlp_widths, rng);
  register_mlp(store, "d.fc", 2 * cfg.global_feature_width(), cfg.fc_widths, rng);
}

std::size_t generator_param_count(const GeneratorConfig& cfg) {
  cfg.validate();
  std::size_t n = 0;
  for (std::size_t i = 0; i < cfg.blocks.size(); ++i)
    n += mlp_param_count(cfg.block_input_width(static_cast<int>(i)), cfg.blocks[i].mlp_widths);
  const int last = static_cast<int>(cfg.blocks.size()) - 1;
  n += mlp_param_count(2 * cfg.point_feature_width(last), cfg.final_mlp_widths);
  return n;
}

std::size_t discriminator_param_count(const DiscriminatorConfig& cfg) {
  cfg.validate();
  return mlp_param_count(3, cfg.mlp_widths) +
         mlp_param_count(2 * cfg.global_feature_width(), cfg.fc_widths);
}

Tensor deeppoint_block(Tape& tape, ParamStore& store, const std::string& prefix,
                       Tensor f_in, Tensor xyz, const BlockConfig& cfg, bool xyz_skip,
                       Tensor* point_features) {
  if (xyz.cols != 3 || xyz.rows != f_in.rows)
    throw ShapeError("deeppoint_block: xyz must be n x 3 with n matching the input");
  const Tensor h = shared_mlp(tape, f_in, store, prefix, cfg.mlp_widths,
                              /*final_linear=*/false);
  const Tensor f = xyz_skip ? tape.concat_cols(h, xyz) : h;
  const Tensor g = tape.max_pool_points(f);
  if (point_features) *point_features = f;
  return tape.concat_cols(f, tape.broadcast_rows(g, f.rows));
}

Tensor generator_forward(Tape& tape, ParamStore& store, const GeneratorConfig& cfg,
                         Tensor xyz) {
  cfg.validate();
  if (xyz.cols != 3) throw ShapeError("generator_forward: input must be n x 3");

  std::vector<Tensor> saved_features(cfg.blocks.size());
  Tensor h = xyz;
  for (std::size_t i = 0; i < cfg.blocks.size(); ++i) {
    for (const auto& [src, dst] : cfg.cross_block_skips)
      if (static_cast<std::size_t>(dst - 1) == i)
        h = tape.concat_cols(h, saved_features[static_cast<std::size_t>(src - 1)]);
    h = deeppoint_block(tape, store, "g.block" + std::to_string(i) + ".mlp", h, xyz,
                        cfg.blocks[i], cfg.block_xyz_skip, &saved_features[i]);
  }
  return shared_mlp(tape, h, store, "g.final", cfg.final_mlp_widths, /*final_linear=*/true);
}

PointCloud generator_predict(ParamStore& store, const GeneratorConfig& cfg,
                             const PointCloud& normalized_input) {
  Tape tape;
  const Tensor xyz = tape.input(cloud_to_matrix(normalized_input));
  const Tensor out = generator_forward(tape, store, cfg, xyz);
  PointCloud cloud = matrix_to_cloud(tape.value(out));
  tape.clear();
  return cloud;
}

namespace {

Tensor pooled_global_feature(Tape& tape, Tensor features, PoolMode mode) {
  switch (mode) {
    case PoolMode::Max: return tape.max_pool_points(features);
    case PoolMode::Avg: return tape.mean_pool_points(features);
    case PoolMode::Mix:
      return tape.concat_cols(tape.max_pool_points(features),
                              tape.mean_pool_points(features));
  }
  throw InvalidConfig("unknown pooling mode");
}

}  // namespace

Tensor discriminator_forward(Tape& tape, ParamStore& store, const DiscriminatorConfig& cfg,
                             Tensor condition, Tensor candidate) {
  cfg.validate();
  if (condition.cols != 3 || candidate.cols != 3)
    throw ShapeError("discriminator_forward: both streams must be n x 3");

  const auto stream = [&](Tensor cloud) {
    const Tensor feats =
        shared_mlp(tape, cloud, store, "d.mlp", cfg.mlp_widths, /*final_linear=*/false);
    return pooled_global_feature(tape, feats, cfg.pooling);
  };
  const Tensor global = tape.concat_cols(stream(condition), stream(candidate));
  return shared_mlp(tape, global, store, "d.fc", cfg.fc_widths, /*final_linear=*/true);
}

}  // namespace dp
