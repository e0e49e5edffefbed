#pragma once

#include "dp/types.hpp"

#include <string>
#include <vector>

namespace dp {

/// Dense row-major matrix of 64-bit floats. (rows, cols) is the only shape
/// notion the engine supports; 1xd rows double as vectors and 1x1 as scalars.
struct Matrix {
  int rows = 0, cols = 0;
  std::vector<double> v;

  Matrix() = default;
  Matrix(int r, int c) : rows(r), cols(c), v(static_cast<std::size_t>(r) * c, 0.0) {}

  double& operator()(int i, int j) { return v[static_cast<std::size_t>(i) * cols + j]; }
  double operator()(int i, int j) const { return v[static_cast<std::size_t>(i) * cols + j]; }

  std::size_t count() const { return v.size(); }

  bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }

  bool all_finite() const {
    for (double x : v)
      if (!std::isfinite(x)) return false;
    return true;
  }

  static Matrix filled(int r, int c, double value) {
    Matrix m(r, c);
    std::fill(m.v.begin(), m.v.end(), value);
    return m;
  }
};

Matrix cloud_to_matrix(const PointCloud& cloud);
PointCloud matrix_to_cloud(const Matrix& m);

class ParamStore;

/// Handle to a node on a Tape. Carries the shape for convenience.
struct Tensor {
  int id = -1;
  int rows = 0, cols = 0;
};

/// Append-only record of forward operations. One backward() per recorded
/// forward pass; backward clears the tape. Single-threaded by contract.
class Tape {
public:
  Tensor input(Matrix value);
  Tensor scalar_input(double value);

  /// Leaf bound to a named parameter; backward() accumulates into the
  /// store's gradient buffer.
  Tensor param(ParamStore& store, const std::string& name);

  Tensor matmul(Tensor a, Tensor b);
  Tensor add(Tensor a, Tensor b);
  Tensor sub(Tensor a, Tensor b);
  Tensor add_row_vec(Tensor a, Tensor row);  // a: n x d, row: 1 x d
  Tensor scale(Tensor a, double s);
  Tensor add_const(Tensor a, double c);
  Tensor square(Tensor a);
  Tensor leaky_relu(Tensor a, double alpha);

  /// Columnwise concatenation of equal-row-count inputs.
  Tensor concat_cols(Tensor a, Tensor b);

  /// Column maxima (1 x d). Backward routes each column's gradient to the
  /// argmax row saved at forward time; ties keep the lowest row index.
  Tensor max_pool_points(Tensor a);

  /// Column means (1 x d); backward spreads gradient/n over rows.
  Tensor mean_pool_points(Tensor a);

  /// n stacked copies of a 1 x d row; backward sums row gradients.
  Tensor broadcast_rows(Tensor g, int n);

  /// Scalar node with an externally supplied value and Jacobian wrt `a`.
  /// Used for losses whose forward pass runs outside the tape (Chamfer/EMD
  /// with combinatorial assignments held fixed).
  Tensor external_scalar(Tensor a, double value, Matrix dvalue_da);

  const Matrix& value(Tensor t) const;
  double scalar_value(Tensor t) const;

  /// Reverse pass from a 1x1 loss node. Accumulates parameter gradients into
  /// their stores, then clears the tape.
  void backward(Tensor loss);

  std::size_t size() const { return nodes_.size(); }
  void clear() { nodes_.clear(); }

private:
  enum class Op {
    Input,
    Param,
    MatMul,
    Add,
    Sub,
    AddRowVec,
    Scale,
    AddConst,
    Square,
    LeakyRelu,
    ConcatCols,
    MaxPoolPoints,
    MeanPoolPoints,
    BroadcastRows,
    ExternalScalar,
  };

  struct Node {
    explicit Node(Op o) : op(o) {}
    Op op;
    int a = -1, b = -1;
    Matrix value;
    Matrix grad;                  // allocated during backward
    double c0 = 0.0;              // scale factor / shift / leaky slope
    std::vector<int> argmax;      // MaxPoolPoints
    Matrix ext_jacobian;          // ExternalScalar
    ParamStore* store = nullptr;  // Param
    int param_index = -1;
  };

  Tensor push(Node node);
  const Node& at(Tensor t) const;
  static const char* op_name(Op op);

  std::vector<Node> nodes_;
};

}  // namespace dp
