#include "dp/nn.hpp"

namespace dp {

Matrix glorot_uniform(int fan_in, int fan_out, Rng& rng) {
  const double bound = std::sqrt(6.0 / (fan_in + fan_out));
  Matrix m(fan_in, fan_out);
  for (double& x : m.v) x = rng.uniform(-bound, bound);
  return m;
}

void register_mlp(ParamStore& store, const std::string& prefix, int in_dim,
                  std::span<const int> widths, Rng& rng) {
  int d = in_dim;
  for (std::size_t i = 0; i < widths.size(); ++i) {
    const int out = widths[i];
    if (out < 1) throw InvalidConfig("mlp: layer width must be >= 1");
    store.add(prefix + ".w" + std::to_string(i), glorot_uniform(d, out, rng));
    store.add(prefix + ".b" + std::to_string(i), Matrix(1, out));
    d = out;
  }
}

std::size_t mlp_param_count(int in_dim, std::span<const int> widths) {
  std::size_t n = 0;
  int d = in_dim;
  for (int out : widths) {
    n += static_cast<std::size_t>(d) * out + out;
    d = out;
  }
  return n;
}

Tensor shared_mlp(Tape& tape, Tensor x, ParamStore& store, const std::string& prefix,
                  std::span<const int> widths, bool final_linear, double alpha) {
  Tensor h = x;
  for (std::size_t i = 0; i < widths.size(); ++i) {
    const Tensor w = tape.param(store, prefix + ".w" + std::to_string(i));
    const Tensor b = tape.param(store, prefix + ".b" + std::to_string(i));
    h = tape.add_row_vec(tape.matmul(h, w), b);
    const bool last = i + 1 == widths.size();
    if (!(last && final_linear)) h = tape.leaky_relu(h, alpha);
  }
  return h;
}

}  // namespace dp
