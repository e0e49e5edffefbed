#pragma once

#include "dp/tensor.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

namespace dp {

/// Named parameter tensors plus Adam moment buffers. Mutation (adam_step,
/// zero_grads) belongs to the training thread; forward passes only read.
class ParamStore {
public:
  struct Entry {
    std::string name;
    Matrix value;
    Matrix grad;
    Matrix m1, m2;  // Adam first/second moments
  };

  int add(const std::string& name, Matrix value);

  bool has(const std::string& name) const { return index_.count(name) != 0; }
  int index_of(const std::string& name) const;

  Entry& entry(int index) { return entries_[static_cast<std::size_t>(index)]; }
  const Entry& entry(int index) const { return entries_[static_cast<std::size_t>(index)]; }
  Entry& entry(const std::string& name) { return entries_[index_of(name)]; }
  const std::vector<Entry>& entries() const { return entries_; }

  std::size_t size() const { return entries_.size(); }
  std::size_t scalar_count() const;

  void zero_grads();
  double grad_norm() const;
  /// Rescales gradients so their global norm is at most max_norm.
  /// Returns true when clipping fired.
  bool clip_grads(double max_norm);

  /// Standard Adam with bias correction; zeroes gradients afterwards.
  void adam_step(double lr, double beta1, double beta2, double eps);

  std::uint64_t adam_t() const { return adam_t_; }
  void set_adam_t(std::uint64_t t) { adam_t_ = t; }

  /// Binary checkpoint ("DPCK", little-endian); see README for the layout.
  void save(const std::filesystem::path& path, bool with_moments = true) const;
  static ParamStore load(const std::filesystem::path& path);

private:
  std::vector<Entry> entries_;
  std::unordered_map<std::string, int> index_;
  std::uint64_t adam_t_ = 0;
};

}  // namespace dp
