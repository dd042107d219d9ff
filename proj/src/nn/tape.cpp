#include "socialego/nn/tape.hpp"

#include <openssl/evp.h>

#include <cmath>
#include <cstring>
#include <iomanip>
#include <memory>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "socialego/body_model.hpp"
#include "socialego/errors.hpp"

namespace socialego::nn {

// ---- ParameterStore -------------------------------------------------------

ParameterStore::Id ParameterStore::add(std::string name, Matrix init) {
  Parameter p;
  p.name = std::move(name);
  p.grad = Matrix::Zero(init.rows(), init.cols());
  p.value = std::move(init);
  params_.push_back(std::move(p));
  return params_.size() - 1;
}

std::size_t ParameterStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += static_cast<std::size_t>(p.value.size());
  return n;
}

void ParameterStore::zero_grad() {
  for (auto& p : params_) p.grad.setZero();
}

void ParameterStore::quantize_to_float() {
  for (auto& p : params_) p.value = p.value.cast<float>().cast<double>();
}

std::vector<float> ParameterStore::to_floats() const {
  std::vector<float> out;
  out.reserve(scalar_count());
  for (const auto& p : params_)
    for (Eigen::Index i = 0; i < p.value.size(); ++i) out.push_back(static_cast<float>(p.value.data()[i]));
  return out;
}

void ParameterStore::from_floats(std::span<const float> blob) {
  if (blob.size() != scalar_count()) throw InvalidArgument("parameter blob size does not match model");
  std::size_t k = 0;
  for (auto& p : params_)
    for (Eigen::Index i = 0; i < p.value.size(); ++i) p.value.data()[i] = static_cast<double>(blob[k++]);
}

std::string ParameterStore::hash(const std::string& prefix) const {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr);
  for (const auto& p : params_) {
    if (p.name.compare(0, prefix.size(), prefix) != 0) continue;
    EVP_DigestUpdate(ctx.get(), p.name.data(), p.name.size());
    for (Eigen::Index i = 0; i < p.value.size(); ++i) {
      const float f = static_cast<float>(p.value.data()[i]);
      EVP_DigestUpdate(ctx.get(), &f, sizeof f);
    }
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), md, &len);
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
  return os.str();
}

// ---- Tape plumbing ----------------------------------------------------------

Var Tape::push(Matrix value, bool requires_grad, std::function<void(Tape&, int)> backward) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  if (requires_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Matrix& Tape::grad_ref(int id) {
  Node& n = nodes_[id];
  if (!n.has_grad) {
    n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
    n.has_grad = true;
  }
  return n.grad;
}

void Tape::accumulate(Var v, const Matrix& g) {
  if (!needs(v)) return;
  grad_ref(v.id) += g;
}

Matrix Tape::grad(Var v) const {
  const Node& n = nodes_[v.id];
  if (!n.has_grad) return Matrix::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

Var Tape::constant(Matrix value) { return push(std::move(value), false, nullptr); }

Var Tape::input(Matrix value) {
  return push(std::move(value), true, [](Tape&, int) {});
}

Var Tape::param(ParameterStore& store, ParameterStore::Id id, bool trainable) {
  if (!trainable) return constant(store[id].value);
  Parameter* p = &store[id];
  return push(p->value, true, [p](Tape& t, int self) { p->grad += t.nodes_[self].grad; });
}

void Tape::backward(Var loss) {
  if (nodes_[loss.id].value.size() != 1) throw InvalidArgument("backward() needs a scalar loss");
  grad_ref(loss.id).setConstant(1.0);
  for (int i = loss.id; i >= 0; --i) {
    Node& n = nodes_[i];
    if (!n.requires_grad || !n.has_grad || !n.backward) continue;
    n.backward(*this, i);
  }
}

// ---- Elementwise and linear algebra ---------------------------------------

Var Tape::matmul(Var a, Var b) {
  Matrix out = value(a) * value(b);
  return push(std::move(out), needs(a) || needs(b), [a, b](Tape& t, int self) {
    const Matrix& g = t.nodes_[self].grad;
    if (t.needs(a)) t.grad_ref(a.id).noalias() += g * t.value(b).transpose();
    if (t.needs(b)) t.grad_ref(b.id).noalias() += t.value(a).transpose() * g;
  });
}

Var Tape::linear(Var x, Var W, Var b) {
  Matrix out = value(x) * value(W);
  out.rowwise() += value(b).row(0);
  return push(std::move(out), needs(x) || needs(W) || needs(b), [x, W, b](Tape& t, int self) {
    const Matrix& g = t.nodes_[self].grad;
    if (t.needs(x)) t.grad_ref(x.id).noalias() += g * t.value(W).transpose();
    if (t.needs(W)) t.grad_ref(W.id).noalias() += t.value(x).transpose() * g;
    if (t.needs(b)) t.grad_ref(b.id).row(0) += g.colwise().sum();
  });
}

Var Tape::add(Var a, Var b) {
  Matrix out = value(a) + value(b);
  return push(std::move(out), needs(a) || needs(b), [a, b](Tape& t, int self) {
    const Matrix& g = t.nodes_[self].grad;
    t.accumulate(a, g);
    t.accumulate(b, g);
  });
}

Var Tape::sub(Var a, Var b) {
  Matrix out = value(a) - value(b);
  return push(std::move(out), needs(a) || needs(b), [a, b](Tape& t, int self) {
    const Matrix& g = t.nodes_[self].grad;
    t.accumulate(a, g);
    if (t.needs(b)) t.grad_ref(b.id) -= g;
  });
}

Var Tape::mul(Var a, Var b) {
  Matrix out = value(a).cwiseProduct(value(b));
  return push(std::move(out), needs(a) || needs(b), [a, b](Tape& t, int self) {
    const Matrix& g = t.nodes_[self].grad;
    if (t.needs(a)) t.grad_ref(a.id) += g.cwiseProduct(t.value(b));
    if (t.needs(b)) t.grad_ref(b.id) += g.cwiseProduct(t.value(a));
  });
}

Var Tape::scale(Var a, double s) {
  Matrix out = value(a) * s;
  return push(std::move(out), needs(a), [a, s](Tape& t, int self) {
    t.grad_ref(a.id) += t.nodes_[self].grad * s;
  });
}

Var Tape::add_row(Var a, Var r) {
  Matrix out = value(a);
  out.rowwise() += value(r).row(0);
  return push(std::move(out), needs(a) || needs(r), [a, r](Tape& t, int self) {
    const Matrix& g = t.nodes_[self].grad;
    t.accumulate(a, g);
    if (t.needs(r)) t.grad_ref(r.id).row(0) += g.colwise().sum();
  });
}

Var Tape::affine_const(Var a, const RowVector& row_scale, const RowVector& row_shift) {
  Matrix out = value(a).array().rowwise() * row_scale.array();
  out.rowwise() += row_shift;
  return push(std::move(out), needs(a), [a, row_scale](Tape& t, int self) {
    t.grad_ref(a.id).array() += t.nodes_[self].grad.array().rowwise() * row_scale.array();
  });
}

Var Tape::relu(Var a) {
  Matrix out = value(a).cwiseMax(0.0);
  return push(std::move(out), needs(a), [a](Tape& t, int self) {
    t.grad_ref(a.id).array() += t.nodes_[self].grad.array() * (t.value(a).array() > 0.0).cast<double>();
  });
}

namespace {
constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)
}

Var Tape::gelu(Var a) {
  const Matrix& x = value(a);
  Matrix out = (0.5 * x.array() * (1.0 + (kGeluC * (x.array() + 0.044715 * x.array().cube())).tanh())).matrix();
  return push(std::move(out), needs(a), [a](Tape& t, int self) {
    const auto x = t.value(a).array();
    const auto u = kGeluC * (x + 0.044715 * x.cube());
    const Eigen::ArrayXXd th = u.tanh();
    const Eigen::ArrayXXd d = 0.5 * (1.0 + th) + 0.5 * x * (1.0 - th.square()) * kGeluC * (1.0 + 3.0 * 0.044715 * x.square());
    t.grad_ref(a.id).array() += t.nodes_[self].grad.array() * d;
  });
}

Var Tape::silu(Var a) {
  const Matrix& x = value(a);
  Matrix out = (x.array() / (1.0 + (-x.array()).exp())).matrix();
  return push(std::move(out), needs(a), [a](Tape& t, int self) {
    const auto x = t.value(a).array();
    const Eigen::ArrayXXd s = 1.0 / (1.0 + (-x).exp());
    t.grad_ref(a.id).array() += t.nodes_[self].grad.array() * (s * (1.0 + x * (1.0 - s)));
  });
}

Var Tape::exp(Var a) {
  Matrix out = value(a).array().exp().matrix();
  return push(std::move(out), needs(a), [a](Tape& t, int self) {
    t.grad_ref(a.id).array() += t.nodes_[self].grad.array() * t.nodes_[self].value.array();
  });
}

Var Tape::layer_norm(Var x, Var gamma, Var beta, double eps) {
  const Matrix& X = value(x);
  const Eigen::Index n = X.rows(), c = X.cols();
  auto xhat = std::make_shared<Matrix>(n, c);
  auto inv_std = std::make_shared<Vector>(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double mean = X.row(i).mean();
    const double var = (X.row(i).array() - mean).square().mean();
    (*inv_std)[i] = 1.0 / std::sqrt(var + eps);
    xhat->row(i) = (X.row(i).array() - mean) * (*inv_std)[i];
  }
  Matrix out = xhat->array().rowwise() * value(gamma).row(0).array();
  out.rowwise() += value(beta).row(0);
  return push(std::move(out), needs(x) || needs(gamma) || needs(beta),
              [x, gamma, beta, xhat, inv_std](Tape& t, int self) {
                const Matrix& g = t.nodes_[self].grad;
                if (t.needs(gamma)) t.grad_ref(gamma.id).row(0) += (g.array() * xhat->array()).colwise().sum().matrix();
                if (t.needs(beta)) t.grad_ref(beta.id).row(0) += g.colwise().sum();
                if (t.needs(x)) {
                  const Matrix gx = g.array().rowwise() * t.value(gamma).row(0).array();
                  const double c = static_cast<double>(gx.cols());
                  Matrix& dx = t.grad_ref(x.id);
                  for (Eigen::Index i = 0; i < gx.rows(); ++i) {
                    const double m1 = gx.row(i).sum() / c;
                    const double m2 = gx.row(i).dot(xhat->row(i)) / c;
                    dx.row(i).array() += (*inv_std)[i] * (gx.row(i).array() - m1 - xhat->row(i).array() * m2);
                  }
                }
              });
}

// ---- Attention --------------------------------------------------------------

Var Tape::attention(Var q, Var k, Var v, int heads, int batch, int nq, int nk) {
  const Matrix& Q = value(q);
  const Matrix& K = value(k);
  const Matrix& V = value(v);
  const int d = static_cast<int>(Q.cols());
  if (d % heads != 0) throw InvalidArgument("attention width not divisible by heads");
  if (Q.rows() != batch * nq || K.rows() != batch * nk || V.rows() != batch * nk)
    throw InvalidArgument("attention block sizes do not match inputs");
  const int dh = d / heads;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));

  // Softmax weights per (sample, head), kept for the backward pass.
  auto probs = std::make_shared<std::vector<Matrix>>(static_cast<size_t>(batch) * heads);
  Matrix out(batch * nq, d);
#pragma omp parallel for schedule(static)
  for (int bh = 0; bh < batch * heads; ++bh) {
    const int b = bh / heads, h = bh % heads;
    const auto Qb = Q.block(b * nq, h * dh, nq, dh);
    const auto Kb = K.block(b * nk, h * dh, nk, dh);
    const auto Vb = V.block(b * nk, h * dh, nk, dh);
    Matrix S = (Qb * Kb.transpose()) * inv_sqrt;
    for (int i = 0; i < nq; ++i) {
      const double m = S.row(i).maxCoeff();
      S.row(i) = (S.row(i).array() - m).exp();
      S.row(i) /= S.row(i).sum();
    }
    out.block(b * nq, h * dh, nq, dh).noalias() = S * Vb;
    (*probs)[bh] = std::move(S);
  }

  return push(std::move(out), needs(q) || needs(k) || needs(v),
              [q, k, v, heads, batch, nq, nk, dh, inv_sqrt, probs](Tape& t, int self) {
                const Matrix& G = t.nodes_[self].grad;
                const Matrix& Q = t.value(q);
                const Matrix& K = t.value(k);
                const Matrix& V = t.value(v);
                Matrix dQ = Matrix::Zero(Q.rows(), Q.cols());
                Matrix dK = Matrix::Zero(K.rows(), K.cols());
                Matrix dV = Matrix::Zero(V.rows(), V.cols());
#pragma omp parallel for schedule(static)
                for (int bh = 0; bh < batch * heads; ++bh) {
                  const int b = bh / heads, h = bh % heads;
                  const Matrix& P = (*probs)[bh];
                  const auto Gb = G.block(b * nq, h * dh, nq, dh);
                  const auto Qb = Q.block(b * nq, h * dh, nq, dh);
                  const auto Kb = K.block(b * nk, h * dh, nk, dh);
                  const auto Vb = V.block(b * nk, h * dh, nk, dh);
                  dV.block(b * nk, h * dh, nk, dh).noalias() = P.transpose() * Gb;
                  Matrix dP = Gb * Vb.transpose();
                  for (int i = 0; i < nq; ++i) {
                    const double dot = dP.row(i).dot(P.row(i));
                    dP.row(i) = P.row(i).array() * (dP.row(i).array() - dot);
                  }
                  dQ.block(b * nq, h * dh, nq, dh).noalias() = dP * Kb * inv_sqrt;
                  dK.block(b * nk, h * dh, nk, dh).noalias() = dP.transpose() * Qb * inv_sqrt;
                }
                t.accumulate(q, dQ);
                t.accumulate(k, dK);
                t.accumulate(v, dV);
              });
}

// ---- Shape ops --------------------------------------------------------------

Var Tape::rows(Var a, int start, int count) {
  Matrix out = value(a).middleRows(start, count);
  return push(std::move(out), needs(a), [a, start, count](Tape& t, int self) {
    t.grad_ref(a.id).middleRows(start, count) += t.nodes_[self].grad;
  });
}

Var Tape::gather_rows(Var a, std::vector<int> index) {
  const Matrix& A = value(a);
  Matrix out(static_cast<Eigen::Index>(index.size()), A.cols());
  for (size_t i = 0; i < index.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = A.row(index[i]);
  return push(std::move(out), needs(a), [a, index = std::move(index)](Tape& t, int self) {
    const Matrix& g = t.nodes_[self].grad;
    Matrix& ga = t.grad_ref(a.id);
    for (size_t i = 0; i < index.size(); ++i) ga.row(index[i]) += g.row(static_cast<Eigen::Index>(i));
  });
}

Var Tape::concat_rows(std::span<const Var> parts) {
  Eigen::Index r = 0, c = value(parts[0]).cols();
  bool req = false;
  for (Var p : parts) {
    if (value(p).cols() != c) throw InvalidArgument("concat_rows column mismatch");
    r += value(p).rows();
    req = req || needs(p);
  }
  Matrix out(r, c);
  r = 0;
  for (Var p : parts) {
    out.middleRows(r, value(p).rows()) = value(p);
    r += value(p).rows();
  }
  std::vector<Var> ps(parts.begin(), parts.end());
  return push(std::move(out), req, [ps](Tape& t, int self) {
    Eigen::Index r = 0;
    for (Var p : ps) {
      const Eigen::Index n = t.value(p).rows();
      if (t.needs(p)) t.grad_ref(p.id) += t.nodes_[self].grad.middleRows(r, n);
      r += n;
    }
  });
}

Var Tape::concat_cols(std::span<const Var> parts) {
  Eigen::Index r = value(parts[0]).rows(), c = 0;
  bool req = false;
  for (Var p : parts) {
    if (value(p).rows() != r) throw InvalidArgument("concat_cols row mismatch");
    c += value(p).cols();
    req = req || needs(p);
  }
  Matrix out(r, c);
  c = 0;
  for (Var p : parts) {
    out.middleCols(c, value(p).cols()) = value(p);
    c += value(p).cols();
  }
  std::vector<Var> ps(parts.begin(), parts.end());
  return push(std::move(out), req, [ps](Tape& t, int self) {
    Eigen::Index c = 0;
    for (Var p : ps) {
      const Eigen::Index n = t.value(p).cols();
      if (t.needs(p)) t.grad_ref(p.id) += t.nodes_[self].grad.middleCols(c, n);
      c += n;
    }
  });
}

Var Tape::repeat_rows(Var a, int count) {
  const Matrix& A = value(a);
  Matrix out(A.rows() * count, A.cols());
  for (Eigen::Index b = 0; b < A.rows(); ++b)
    for (int i = 0; i < count; ++i) out.row(b * count + i) = A.row(b);
  return push(std::move(out), needs(a), [a, count](Tape& t, int self) {
    const Matrix& g = t.nodes_[self].grad;
    Matrix& ga = t.grad_ref(a.id);
    for (Eigen::Index b = 0; b < ga.rows(); ++b) ga.row(b) += g.middleRows(b * count, count).colwise().sum();
  });
}

Var Tape::max_pool_rows(Var a, int block) {
  const Matrix& A = value(a);
  if (block < 1 || A.rows() % block != 0) throw InvalidArgument("max_pool_rows block does not divide rows");
  const Eigen::Index groups = A.rows() / block, c = A.cols();
  Matrix out(groups, c);
  auto argmax = std::make_shared<std::vector<int>>(static_cast<size_t>(groups * c));
  for (Eigen::Index g = 0; g < groups; ++g) {
    for (Eigen::Index j = 0; j < c; ++j) {
      int best = 0;
      double m = A(g * block, j);
      for (int i = 1; i < block; ++i) {
        const double x = A(g * block + i, j);
        if (x > m) {
          m = x;
          best = i;
        }
      }
      out(g, j) = m;
      (*argmax)[static_cast<size_t>(g * c + j)] = static_cast<int>(g * block + best);
    }
  }
  return push(std::move(out), needs(a), [a, argmax, c](Tape& t, int self) {
    const Matrix& g = t.nodes_[self].grad;
    Matrix& ga = t.grad_ref(a.id);
    for (Eigen::Index r = 0; r < g.rows(); ++r)
      for (Eigen::Index j = 0; j < c; ++j) ga((*argmax)[static_cast<size_t>(r * c + j)], j) += g(r, j);
  });
}

// ---- Losses -----------------------------------------------------------------

Var Tape::mse(Var a, const Matrix& target) {
  const Matrix& A = value(a);
  if (A.rows() != target.rows() || A.cols() != target.cols()) throw InvalidArgument("mse shape mismatch");
  const double n = static_cast<double>(A.size());
  Matrix out(1, 1);
  out(0, 0) = (A - target).squaredNorm() / n;
  return push(std::move(out), needs(a), [a, target, n](Tape& t, int self) {
    t.grad_ref(a.id) += (t.value(a) - target) * (2.0 * t.nodes_[self].grad(0, 0) / n);
  });
}

Var Tape::mean_square(Var a) {
  const double n = static_cast<double>(value(a).size());
  Matrix out(1, 1);
  out(0, 0) = value(a).squaredNorm() / n;
  return push(std::move(out), needs(a), [a, n](Tape& t, int self) {
    t.grad_ref(a.id) += t.value(a) * (2.0 * t.nodes_[self].grad(0, 0) / n);
  });
}

Var Tape::gaussian_kl(Var mu, Var logvar) {
  const Matrix& M = value(mu);
  const Matrix& L = value(logvar);
  const double rows = static_cast<double>(M.rows());
  Matrix out(1, 1);
  out(0, 0) = 0.5 * (M.array().square() + L.array().exp() - 1.0 - L.array()).sum() / rows;
  return push(std::move(out), needs(mu) || needs(logvar), [mu, logvar, rows](Tape& t, int self) {
    const double g = t.nodes_[self].grad(0, 0) / rows;
    if (t.needs(mu)) t.grad_ref(mu.id) += t.value(mu) * g;
    if (t.needs(logvar)) t.grad_ref(logvar.id).array() += 0.5 * g * (t.value(logvar).array().exp() - 1.0);
  });
}

Var Tape::sum(Var a) {
  Matrix out(1, 1);
  out(0, 0) = value(a).sum();
  return push(std::move(out), needs(a), [a](Tape& t, int self) {
    t.grad_ref(a.id).array() += t.nodes_[self].grad(0, 0);
  });
}

// ---- Kinematics -------------------------------------------------------------

Var Tape::forward_kinematics(Var poses, const BodyModel& body) {
  const Matrix& P = value(poses);
  const int J = body.joint_count();
  if (P.cols() != body.pose_width()) throw InvalidArgument("pose rows do not match body width");
  Matrix out(P.rows(), 3 * J);
#pragma omp parallel for schedule(static)
  for (Eigen::Index r = 0; r < P.rows(); ++r) {
    const Joints x = socialego::forward_kinematics(P.row(r).transpose(), body);
    for (int j = 0; j < J; ++j) out.block(r, 3 * j, 1, 3) = x.row(j);
  }
  const BodyModel* bp = &body;
  return push(std::move(out), needs(poses), [poses, bp, J](Tape& t, int self) {
    const Matrix& G = t.nodes_[self].grad;
    const Matrix& P = t.value(poses);
    Matrix dP(P.rows(), P.cols());
#pragma omp parallel for schedule(static)
    for (Eigen::Index r = 0; r < P.rows(); ++r) {
      Joints gj(J, 3);
      for (int j = 0; j < J; ++j) gj.row(j) = G.block(r, 3 * j, 1, 3);
      dP.row(r) = forward_kinematics_vjp(P.row(r).transpose(), *bp, gj).transpose();
    }
    t.grad_ref(poses.id) += dP;
  });
}

}  // namespace socialego::nn
