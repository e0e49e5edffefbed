#pragma once

#include "dp/param_store.hpp"
#include "dp/rng.hpp"
#include "dp/tensor.hpp"

#include <span>
#include <string>

namespace dp {

/// Hidden-layer activation slope used by both networks.
inline constexpr double kLeakyReluAlpha = 0.2;

/// Glorot-uniform matrix: entries in +-sqrt(6 / (fan_in + fan_out)).
Matrix glorot_uniform(int fan_in, int fan_out, Rng& rng);

/// Registers "<prefix>.w{i}" / "<prefix>.b{i}" for an MLP with the given
/// per-layer output widths. Weights are Glorot, biases zero.
void register_mlp(ParamStore& store, const std::string& prefix, int in_dim,
                  std::span<const int> widths, Rng& rng);

std::size_t mlp_param_count(int in_dim, std::span<const int> widths);

/// One MLP applied identically to every row of x (n x d_in -> n x d_out).
/// LeakyReLU after every layer; pass final_linear to leave the last layer
/// unactivated.
Tensor shared_mlp(Tape& tape, Tensor x, ParamStore& store, const std::string& prefix,
                  std::span<const int> widths, bool final_linear,
                  double alpha = kLeakyReluAlpha);

}  // namespace dp
