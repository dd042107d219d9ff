#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace socialego {
struct BodyModel;
}

namespace socialego::nn {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;
};

// Owns the trainable tensors of one model. Layers refer to entries by index,
// so copying a store copies the model.
class ParameterStore {
 public:
  using Id = std::size_t;

  Id add(std::string name, Matrix init);

  Parameter& operator[](Id id) { return params_[id]; }
  const Parameter& operator[](Id id) const { return params_[id]; }

  std::size_t size() const { return params_.size(); }
  std::size_t scalar_count() const;
  std::vector<Parameter>& all() { return params_; }
  const std::vector<Parameter>& all() const { return params_; }

  void zero_grad();

  // Rounds every value to the nearest float32 so that the in-memory model
  // equals what a checkpoint stores.
  void quantize_to_float();

  // Parameter values in declaration order as float32.
  std::vector<float> to_floats() const;
  void from_floats(std::span<const float> blob);

  // SHA-256 (hex) of the float32 values of parameters whose name starts with prefix.
  std::string hash(const std::string& prefix = "") const;

 private:
  std::vector<Parameter> params_;
};

struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

// Reverse-mode automatic differentiation over row-major matrices. Nodes are
// appended in evaluation order; backward() sweeps them in reverse.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  // Leaf bound to a parameter. With trainable = false the value is read
  // but no gradient is ever written back.
  Var param(ParameterStore& store, ParameterStore::Id id, bool trainable = true);
  // Leaf whose gradient is kept on the tape (read it with grad()).
  Var input(Matrix value);

  const Matrix& value(Var v) const { return nodes_[v.id].value; }
  // Gradient after backward(); zero matrix if nothing flowed into v.
  Matrix grad(Var v) const;
  double scalar(Var v) const { return nodes_[v.id].value(0, 0); }

  Var matmul(Var a, Var b);
  // x W + b with W (in x out) and b (1 x out).
  Var linear(Var x, Var W, Var b);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var scale(Var a, double s);
  // a + row broadcast of r (1 x cols).
  Var add_row(Var a, Var r);
  // Adds a constant row-broadcast matrix: a * row_scale + row_shift (both 1 x cols, constant).
  Var affine_const(Var a, const RowVector& row_scale, const RowVector& row_shift);
  Var relu(Var a);
  Var gelu(Var a);
  Var silu(Var a);
  Var exp(Var a);
  Var layer_norm(Var x, Var gamma, Var beta, double eps = 1e-5);

  // Multi-head scaled dot-product attention. q has batch*nq rows, k and v
  // have batch*nk rows; sample b attends only within its own block.
  Var attention(Var q, Var k, Var v, int heads, int batch, int nq, int nk);

  Var rows(Var a, int start, int count);
  Var gather_rows(Var a, std::vector<int> index);
  Var concat_rows(std::span<const Var> parts);
  Var concat_cols(std::span<const Var> parts);
  // Row b of a (batch x c) repeated `count` times, for every b.
  Var repeat_rows(Var a, int count);
  // Per-block column max over blocks of `block` rows.
  Var max_pool_rows(Var a, int block);

  // Mean of squared differences to a constant target.
  Var mse(Var a, const Matrix& target);
  Var mean_square(Var a);
  // 0.5 * mean over rows of sum_j (mu^2 + exp(logvar) - 1 - logvar).
  Var gaussian_kl(Var mu, Var logvar);
  Var sum(Var a);

  // Rows of 3J+3 pose parameters (meters/radians) -> rows of 3J joint positions.
  Var forward_kinematics(Var poses, const BodyModel& body);

  void backward(Var loss);

  std::size_t node_count() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    bool has_grad = false;
    std::function<void(Tape&, int)> backward;
  };

  Var push(Matrix value, bool requires_grad, std::function<void(Tape&, int)> backward);
  bool needs(Var v) const { return nodes_[v.id].requires_grad; }
  Matrix& grad_ref(int id);
  void accumulate(Var v, const Matrix& g);

  std::vector<Node> nodes_;
};

}  // namespace socialego::nn
