#include "dp/tensor.hpp"

#include "dp/param_store.hpp"

#include <algorithm>

namespace dp {

Matrix cloud_to_matrix(const PointCloud& cloud) {
  Matrix m(static_cast<int>(cloud.size()), 3);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    m(static_cast<int>(i), 0) = cloud[i].x;
    m(static_cast<int>(i), 1) = cloud[i].y;
    m(static_cast<int>(i), 2) = cloud[i].z;
  }
  return m;
}

PointCloud matrix_to_cloud(const Matrix& m) {
  if (m.cols != 3) throw ShapeError("matrix_to_cloud: expected 3 columns");
  PointCloud c;
  c.points.reserve(static_cast<std::size_t>(m.rows));
  for (int i = 0; i < m.rows; ++i) c.points.push_back({m(i, 0), m(i, 1), m(i, 2)});
  return c;
}

const char* Tape::op_name(Op op) {
  switch (op) {
    case Op::Input: return "input";
    case Op::Param: return "param";
    case Op::MatMul: return "matmul";
    case Op::Add: return "add";
    case Op::Sub: return "sub";
    case Op::AddRowVec: return "add_row_vec";
    case Op::Scale: return "scale";
    case Op::AddConst: return "add_const";
    case Op::Square: return "square";
    case Op::LeakyRelu: return "leaky_relu";
    case Op::ConcatCols: return "concat_cols";
    case Op::MaxPoolPoints: return "max_pool_points";
    case Op::MeanPoolPoints: return "mean_pool_points";
    case Op::BroadcastRows: return "broadcast_rows";
    case Op::ExternalScalar: return "external_scalar";
  }
  return "?";
}

Tensor Tape::push(Node node) {
  if (!node.value.all_finite())
    throw NumericalError(std::string("non-finite value produced by op #") +
                         std::to_string(nodes_.size()) + " (" + op_name(node.op) + ")");
  const int id = static_cast<int>(nodes_.size());
  const Tensor t{id, node.value.rows, node.value.cols};
  nodes_.push_back(std::move(node));
  return t;
}

const Tape::Node& Tape::at(Tensor t) const {
  if (t.id < 0 || t.id >= static_cast<int>(nodes_.size()))
    throw ShapeError("Tape: tensor handle does not belong to this tape");
  return nodes_[static_cast<std::size_t>(t.id)];
}

Tensor Tape::input(Matrix value) {
  Node n{Op::Input};
  n.value = std::move(value);
  return push(std::move(n));
}

Tensor Tape::scalar_input(double value) {
  Matrix m(1, 1);
  m(0, 0) = value;
  return input(std::move(m));
}

Tensor Tape::param(ParamStore& store, const std::string& name) {
  Node n{Op::Param};
  n.store = &store;
  n.param_index = store.index_of(name);
  n.value = store.entry(n.param_index).value;
  return push(std::move(n));
}

Tensor Tape::matmul(Tensor a, Tensor b) {
  if (a.cols != b.rows) throw ShapeError("matmul: inner dimensions differ");
  const Matrix& A = at(a).value;
  const Matrix& B = at(b).value;
  Node n{Op::MatMul};
  n.a = a.id;
  n.b = b.id;
  n.value = Matrix(A.rows, B.cols);
  for (int i = 0; i < A.rows; ++i)
    for (int k = 0; k < A.cols; ++k) {
      const double aik = A(i, k);
      if (aik == 0.0) continue;
      for (int j = 0; j < B.cols; ++j) n.value(i, j) += aik * B(k, j);
    }
  return push(std::move(n));
}

Tensor Tape::add(Tensor a, Tensor b) {
  const Matrix& A = at(a).value;
  const Matrix& B = at(b).value;
  if (!A.same_shape(B)) throw ShapeError("add: shape mismatch");
  Node n{Op::Add};
  n.a = a.id;
  n.b = b.id;
  n.value = A;
  for (std::size_t i = 0; i < B.count(); ++i) n.value.v[i] += B.v[i];
  return push(std::move(n));
}

Tensor Tape::sub(Tensor a, Tensor b) {
  const Matrix& A = at(a).value;
  const Matrix& B = at(b).value;
  if (!A.same_shape(B)) throw ShapeError("sub: shape mismatch");
  Node n{Op::Sub};
  n.a = a.id;
  n.b = b.id;
  n.value = A;
  for (std::size_t i = 0; i < B.count(); ++i) n.value.v[i] -= B.v[i];
  return push(std::move(n));
}

Tensor Tape::add_row_vec(Tensor a, Tensor row) {
  const Matrix& A = at(a).value;
  const Matrix& R = at(row).value;
  if (R.rows != 1 || R.cols != A.cols) throw ShapeError("add_row_vec: row must be 1 x cols(a)");
  Node n{Op::AddRowVec};
  n.a = a.id;
  n.b = row.id;
  n.value = A;
  for (int i = 0; i < A.rows; ++i)
    for (int j = 0; j < A.cols; ++j) n.value(i, j) += R(0, j);
  return push(std::move(n));
}

Tensor Tape::scale(Tensor a, double s) {
  Node n{Op::Scale};
  n.a = a.id;
  n.c0 = s;
  n.value = at(a).value;
  for (double& x : n.value.v) x *= s;
  return push(std::move(n));
}

Tensor Tape::add_const(Tensor a, double c) {
  Node n{Op::AddConst};
  n.a = a.id;
  n.c0 = c;
  n.value = at(a).value;
  for (double& x : n.value.v) x += c;
  return push(std::move(n));
}

Tensor Tape::square(Tensor a) {
  Node n{Op::Square};
  n.a = a.id;
  n.value = at(a).value;
  for (double& x : n.value.v) x *= x;
  return push(std::move(n));
}

Tensor Tape::leaky_relu(Tensor a, double alpha) {
  Node n{Op::LeakyRelu};
  n.a = a.id;
  n.c0 = alpha;
  n.value = at(a).value;
  for (double& x : n.value.v) x = x > 0.0 ? x : alpha * x;
  return push(std::move(n));
}

Tensor Tape::concat_cols(Tensor a, Tensor b) {
  const Matrix& A = at(a).value;
  const Matrix& B = at(b).value;
  if (A.rows != B.rows) throw ShapeError("concat_cols: row counts differ");
  Node n{Op::ConcatCols};
  n.a = a.id;
  n.b = b.id;
  n.value = Matrix(A.rows, A.cols + B.cols);
  for (int i = 0; i < A.rows; ++i) {
    for (int j = 0; j < A.cols; ++j) n.value(i, j) = A(i, j);
    for (int j = 0; j < B.cols; ++j) n.value(i, A.cols + j) = B(i, j);
  }
  return push(std::move(n));
}

Tensor Tape::max_pool_points(Tensor a) {
  const Matrix& A = at(a).value;
  if (A.rows < 1) throw ShapeError("max_pool_points: need at least one row");
  Node n{Op::MaxPoolPoints};
  n.a = a.id;
  n.value = Matrix(1, A.cols);
  n.argmax.assign(static_cast<std::size_t>(A.cols), 0);
  for (int j = 0; j < A.cols; ++j) {
    double best = A(0, j);
    int best_i = 0;
    for (int i = 1; i < A.rows; ++i)
      if (A(i, j) > best) {  // strict: ties keep the lowest row
        best = A(i, j);
        best_i = i;
      }
    n.value(0, j) = best;
    n.argmax[static_cast<std::size_t>(j)] = best_i;
  }
  return push(std::move(n));
}

Tensor Tape::mean_pool_points(Tensor a) {
  const Matrix& A = at(a).value;
  if (A.rows < 1) throw ShapeError("mean_pool_points: need at least one row");
  Node n{Op::MeanPoolPoints};
  n.a = a.id;
  n.value = Matrix(1, A.cols);
  for (int j = 0; j < A.cols; ++j) {
    double sum = 0.0;
    for (int i = 0; i < A.rows; ++i) sum += A(i, j);
    n.value(0, j) = sum / A.rows;
  }
  return push(std::move(n));
}

Tensor Tape::broadcast_rows(Tensor g, int n_rows) {
  const Matrix& G = at(g).value;
  if (G.rows != 1) throw ShapeError("broadcast_rows: input must be 1 x d");
  if (n_rows < 1) throw ShapeError("broadcast_rows: row count must be >= 1");
  Node n{Op::BroadcastRows};
  n.a = g.id;
  n.value = Matrix(n_rows, G.cols);
  for (int i = 0; i < n_rows; ++i)
    for (int j = 0; j < G.cols; ++j) n.value(i, j) = G(0, j);
  return push(std::move(n));
}

Tensor Tape::external_scalar(Tensor a, double value, Matrix dvalue_da) {
  const Matrix& A = at(a).value;
  if (!dvalue_da.same_shape(A))
    throw ShapeError("external_scalar: jacobian shape must match the input");
  if (!dvalue_da.all_finite()) throw NumericalError("external_scalar: non-finite jacobian");
  Node n{Op::ExternalScalar};
  n.a = a.id;
  n.value = Matrix(1, 1);
  n.value(0, 0) = value;
  n.ext_jacobian = std::move(dvalue_da);
  return push(std::move(n));
}

const Matrix& Tape::value(Tensor t) const { return at(t).value; }

double Tape::scalar_value(Tensor t) const {
  const Matrix& m = at(t).value;
  if (m.rows != 1 || m.cols != 1) throw ShapeError("scalar_value: tensor is not 1x1");
  return m(0, 0);
}

void Tape::backward(Tensor loss) {
  const Node& loss_node = at(loss);
  if (loss_node.value.rows != 1 || loss_node.value.cols != 1)
    throw ShapeError("backward: loss must be a 1x1 tensor");

  for (Node& n : nodes_) n.grad = Matrix(n.value.rows, n.value.cols);
  nodes_[static_cast<std::size_t>(loss.id)].grad(0, 0) = 1.0;

  const auto grad_of = [&](int id) -> Matrix& { return nodes_[static_cast<std::size_t>(id)].grad; };

  for (int id = static_cast<int>(nodes_.size()) - 1; id >= 0; --id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (!n.grad.all_finite())
      throw NumericalError(std::string("non-finite gradient at op #") + std::to_string(id) +
                           " (" + op_name(n.op) + ")");
    switch (n.op) {
      case Op::Input:
        break;
      case Op::Param: {
        Matrix& pg = n.store->entry(n.param_index).grad;
        for (std::size_t i = 0; i < pg.count(); ++i) pg.v[i] += n.grad.v[i];
        break;
      }
      case Op::MatMul: {
        const Matrix& A = nodes_[static_cast<std::size_t>(n.a)].value;
        const Matrix& B = nodes_[static_cast<std::size_t>(n.b)].value;
        Matrix& dA = grad_of(n.a);
        Matrix& dB = grad_of(n.b);
        // dA += dOut * B^T
        for (int i = 0; i < A.rows; ++i)
          for (int j = 0; j < B.cols; ++j) {
            const double g = n.grad(i, j);
            if (g == 0.0) continue;
            for (int k = 0; k < A.cols; ++k) dA(i, k) += g * B(k, j);
          }
        // dB += A^T * dOut
        for (int i = 0; i < A.rows; ++i)
          for (int k = 0; k < A.cols; ++k) {
            const double aik = A(i, k);
            if (aik == 0.0) continue;
            for (int j = 0; j < B.cols; ++j) dB(k, j) += aik * n.grad(i, j);
          }
        break;
      }
      case Op::Add: {
        Matrix& dA = grad_of(n.a);
        Matrix& dB = grad_of(n.b);
        for (std::size_t i = 0; i < n.grad.count(); ++i) {
          dA.v[i] += n.grad.v[i];
          dB.v[i] += n.grad.v[i];
        }
        break;
      }
      case Op::Sub: {
        Matrix& dA = grad_of(n.a);
        Matrix& dB = grad_of(n.b);
        for (std::size_t i = 0; i < n.grad.count(); ++i) {
          dA.v[i] += n.grad.v[i];
          dB.v[i] -= n.grad.v[i];
        }
        break;
      }
      case Op::AddRowVec: {
        Matrix& dA = grad_of(n.a);
        Matrix& dR = grad_of(n.b);
        for (std::size_t i = 0; i < n.grad.count(); ++i) dA.v[i] += n.grad.v[i];
        for (int i = 0; i < n.grad.rows; ++i)
          for (int j = 0; j < n.grad.cols; ++j) dR(0, j) += n.grad(i, j);
        break;
      }
      case Op::Scale: {
        Matrix& dA = grad_of(n.a);
        for (std::size_t i = 0; i < n.grad.count(); ++i) dA.v[i] += n.c0 * n.grad.v[i];
        break;
      }
      case Op::AddConst: {
        Matrix& dA = grad_of(n.a);
        for (std::size_t i = 0; i < n.grad.count(); ++i) dA.v[i] += n.grad.v[i];
        break;
      }
      case Op::Square: {
        const Matrix& A = nodes_[static_cast<std::size_t>(n.a)].value;
        Matrix& dA = grad_of(n.a);
        for (std::size_t i = 0; i < n.grad.count(); ++i)
          dA.v[i] += 2.0 * A.v[i] * n.grad.v[i];
        break;
      }
      case Op::LeakyRelu: {
        const Matrix& A = nodes_[static_cast<std::size_t>(n.a)].value;
        Matrix& dA = grad_of(n.a);
        for (std::size_t i = 0; i < n.grad.count(); ++i)
          dA.v[i] += (A.v[i] > 0.0 ? 1.0 : n.c0) * n.grad.v[i];
        break;
      }
      case Op::ConcatCols: {
        Matrix& dA = grad_of(n.a);
        Matrix& dB = grad_of(n.b);
        for (int i = 0; i < n.grad.rows; ++i) {
          for (int j = 0; j < dA.cols; ++j) dA(i, j) += n.grad(i, j);
          for (int j = 0; j < dB.cols; ++j) dB(i, j) += n.grad(i, dA.cols + j);
        }
        break;
      }
      case Op::MaxPoolPoints: {
        Matrix& dA = grad_of(n.a);
        for (int j = 0; j < n.grad.cols; ++j)
          dA(n.argmax[static_cast<std::size_t>(j)], j) += n.grad(0, j);
        break;
      }
      case Op::MeanPoolPoints: {
        Matrix& dA = grad_of(n.a);
        const double inv = 1.0 / dA.rows;
        for (int i = 0; i < dA.rows; ++i)
          for (int j = 0; j < dA.cols; ++j) dA(i, j) += inv * n.grad(0, j);
        break;
      }
      case Op::BroadcastRows: {
        Matrix& dG = grad_of(n.a);
        for (int i = 0; i < n.grad.rows; ++i)
          for (int j = 0; j < n.grad.cols; ++j) dG(0, j) += n.grad(i, j);
        break;
      }
      case Op::ExternalScalar: {
        Matrix& dA = grad_of(n.a);
        const double g = n.grad(0, 0);
        for (std::size_t i = 0; i < dA.count(); ++i) dA.v[i] += g * n.ext_jacobian.v[i];
        break;
      }
    }
  }
  nodes_.clear();
}

}  // namespace dp
