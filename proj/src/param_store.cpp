#include "dp/param_store.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

static_assert(std::endian::native == std::endian::little,
              "checkpoint format is little-endian; add byte swapping for this platform");

namespace dp {

namespace {

constexpr char kMagic[4] = {'D', 'P', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ostream& os, std::uint32_t x) {
  os.write(reinterpret_cast<const char*>(&x), sizeof(x));
}

std::uint32_t read_u32(std::istream& is) {
  std::uint32_t x = 0;
  is.read(reinterpret_cast<char*>(&x), sizeof(x));
  return x;
}

void write_record(std::ostream& os, const std::string& name, const Matrix& m) {
  write_u32(os, static_cast<std::uint32_t>(name.size()));
  os.write(name.data(), static_cast<std::streamsize>(name.size()));
  write_u32(os, static_cast<std::uint32_t>(m.rows));
  write_u32(os, static_cast<std::uint32_t>(m.cols));
  os.write(reinterpret_cast<const char*>(m.v.data()),
           static_cast<std::streamsize>(m.count() * sizeof(double)));
}

std::pair<std::string, Matrix> read_record(std::istream& is) {
  const std::uint32_t name_len = read_u32(is);
  if (!is || name_len > 4096) throw ParseError("checkpoint: bad record name length");
  std::string name(name_len, '\0');
  is.read(name.data(), name_len);
  const std::uint32_t rows = read_u32(is);
  const std::uint32_t cols = read_u32(is);
  if (!is || rows > (1u << 24) || cols > (1u << 24))
    throw ParseError("checkpoint: bad record shape");
  Matrix m(static_cast<int>(rows), static_cast<int>(cols));
  is.read(reinterpret_cast<char*>(m.v.data()),
          static_cast<std::streamsize>(m.count() * sizeof(double)));
  if (!is) throw ParseError("checkpoint: truncated record '" + name + "'");
  return {std::move(name), std::move(m)};
}

}  // namespace

int ParamStore::add(const std::string& name, Matrix value) {
  if (has(name)) throw InvalidInput("ParamStore: duplicate parameter name '" + name + "'");
  Entry e;
  e.name = name;
  e.grad = Matrix(value.rows, value.cols);
  e.m1 = Matrix(value.rows, value.cols);
  e.m2 = Matrix(value.rows, value.cols);
  e.value = std::move(value);
  const int idx = static_cast<int>(entries_.size());
  entries_.push_back(std::move(e));
  index_.emplace(name, idx);
  return idx;
}

int ParamStore::index_of(const std::string& name) const {
  const auto it = index_.find(name);
  if (it == index_.end())
    throw InvalidInput("ParamStore: unknown parameter '" + name + "'");
  return it->second;
}

std::size_t ParamStore::scalar_count() const {
  std::size_t n = 0;
  for (const Entry& e : entries_) n += e.value.count();
  return n;
}

void ParamStore::zero_grads() {
  for (Entry& e : entries_) std::fill(e.grad.v.begin(), e.grad.v.end(), 0.0);
}

double ParamStore::grad_norm() const {
  double s = 0.0;
  for (const Entry& e : entries_)
    for (double g : e.grad.v) s += g * g;
  return std::sqrt(s);
}

bool ParamStore::clip_grads(double max_norm) {
  const double norm = grad_norm();
  if (norm <= max_norm || norm == 0.0) return false;
  const double k = max_norm / norm;
  for (Entry& e : entries_)
    for (double& g : e.grad.v) g *= k;
  return true;
}

void ParamStore::adam_step(double lr, double beta1, double beta2, double eps) {
  ++adam_t_;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(adam_t_));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(adam_t_));
  for (Entry& e : entries_) {
    for (std::size_t i = 0; i < e.value.count(); ++i) {
      const double g = e.grad.v[i];
      e.m1.v[i] = beta1 * e.m1.v[i] + (1.0 - beta1) * g;
      e.m2.v[i] = beta2 * e.m2.v[i] + (1.0 - beta2) * g * g;
      const double mhat = e.m1.v[i] / bc1;
      const double vhat = e.m2.v[i] / bc2;
      e.value.v[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
  }
  zero_grads();
}

void ParamStore::save(const std::filesystem::path& path, bool with_moments) const {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("checkpoint: cannot open '" + path.string() + "' for writing");
  os.write(kMagic, 4);
  write_u32(os, kVersion);
  write_u32(os, static_cast<std::uint32_t>(entries_.size()));
  for (const Entry& e : entries_) write_record(os, e.name, e.value);
  if (with_moments) {
    write_u32(os, static_cast<std::uint32_t>(2 * entries_.size() + 1));
    for (const Entry& e : entries_) {
      write_record(os, e.name + ".m1", e.m1);
      write_record(os, e.name + ".m2", e.m2);
    }
    Matrix t(1, 1);
    t(0, 0) = static_cast<double>(adam_t_);
    write_record(os, "adam.t", t);
  }
  if (!os) throw IoError("checkpoint: write failed for '" + path.string() + "'");
}

ParamStore ParamStore::load(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("checkpoint: cannot open '" + path.string() + "'");
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0)
    throw ParseError("checkpoint: bad magic in '" + path.string() + "'");
  const std::uint32_t version = read_u32(is);
  if (version != kVersion)
    throw ParseError("checkpoint: unsupported version " + std::to_string(version));
  const std::uint32_t count = read_u32(is);
  ParamStore out;
  for (std::uint32_t i = 0; i < count; ++i) {
    auto [name, value] = read_record(is);
    out.add(name, std::move(value));
  }
  // Optional moments section.
  if (is.peek() != std::char_traits<char>::eof()) {
    const std::uint32_t mcount = read_u32(is);
    for (std::uint32_t i = 0; i < mcount; ++i) {
      auto [name, value] = read_record(is);
      if (name == "adam.t") {
        out.adam_t_ = static_cast<std::uint64_t>(value(0, 0));
      } else if (name.ends_with(".m1")) {
        out.entry(name.substr(0, name.size() - 3)).m1 = std::move(value);
      } else if (name.ends_with(".m2")) {
        out.entry(name.substr(0, name.size() - 3)).m2 = std::move(value);
      } else {
        throw ParseError("checkpoint: unexpected moment record '" + name + "'");
      }
    }
  }
  return out;
}

}  // namespace dp
