#include <doctest.h>

#include <functional>

#include "helpers.hpp"
#include "socialego/body_model.hpp"
#include "socialego/nn/layers.hpp"
#include "socialego/nn/tape.hpp"
#include "socialego/reference.hpp"

using namespace socialego;
using nn::Matrix;
using nn::Tape;
using nn::Var;

namespace {

Matrix random_matrix(int r, int c, Rng& rng, double scale = 1.0) {
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = scale * rng.normal();
  return m;
}

// Builds a scalar from the given inputs; the scalar is the weighted sum of
// the op's output with fixed random weights, so every output entry matters.
using Op = std::function<Var(Tape&, std::vector<Var>&)>;

double max_grad_error(const std::vector<Matrix>& inputs, const Op& op, std::uint64_t seed) {
  Rng rng(seed);
  Matrix weights;
  auto run = [&](const std::vector<Matrix>& in, std::vector<Matrix>* grads) {
    Tape tape;
    std::vector<Var> vars;
    for (const auto& m : in) vars.push_back(tape.input(m));
    const Var out = op(tape, vars);
    if (weights.size() == 0) weights = random_matrix(tape.value(out).rows(), tape.value(out).cols(), rng);
    const Var loss = tape.sum(tape.mul(out, tape.constant(weights)));
    if (grads) {
      tape.backward(loss);
      for (const auto& v : vars) grads->push_back(tape.grad(v));
    }
    return tape.scalar(loss);
  };
  std::vector<Matrix> analytic;
  run(inputs, &analytic);
  const double h = 1e-6;
  double worst = 0.0;
  for (size_t k = 0; k < inputs.size(); ++k)
    for (Eigen::Index i = 0; i < inputs[k].size(); ++i) {
      auto p = inputs, m = inputs;
      p[k].data()[i] += h;
      m[k].data()[i] -= h;
      const double fd = (run(p, nullptr) - run(m, nullptr)) / (2 * h);
      const double a = analytic[k].data()[i];
      worst = std::max(worst, std::abs(a - fd) / std::max(1.0, std::abs(fd)));
    }
  return worst;
}

}  // namespace

TEST_SUITE("nn") {
  TEST_CASE("elementwise and matrix ops differentiate correctly") {
    Rng rng(20);
    const Matrix a = random_matrix(3, 4, rng), b = random_matrix(3, 4, rng), w = random_matrix(4, 5, rng);
    const Matrix bias = random_matrix(1, 5, rng), row = random_matrix(1, 4, rng);
    CHECK(max_grad_error({a, w}, [](Tape& t, std::vector<Var>& v) { return t.matmul(v[0], v[1]); }, 1) < 1e-7);
    CHECK(max_grad_error({a, w, bias}, [](Tape& t, std::vector<Var>& v) { return t.linear(v[0], v[1], v[2]); }, 2) <
          1e-7);
    CHECK(max_grad_error({a, b}, [](Tape& t, std::vector<Var>& v) { return t.add(v[0], v[1]); }, 3) < 1e-7);
    CHECK(max_grad_error({a, b}, [](Tape& t, std::vector<Var>& v) { return t.sub(v[0], v[1]); }, 4) < 1e-7);
    CHECK(max_grad_error({a, b}, [](Tape& t, std::vector<Var>& v) { return t.mul(v[0], v[1]); }, 5) < 1e-7);
    CHECK(max_grad_error({a}, [](Tape& t, std::vector<Var>& v) { return t.scale(v[0], -1.7); }, 6) < 1e-7);
    CHECK(max_grad_error({a, row}, [](Tape& t, std::vector<Var>& v) { return t.add_row(v[0], v[1]); }, 7) < 1e-7);
    CHECK(max_grad_error({a}, [](Tape& t, std::vector<Var>& v) { return t.gelu(v[0]); }, 8) < 1e-7);
    CHECK(max_grad_error({a}, [](Tape& t, std::vector<Var>& v) { return t.silu(v[0]); }, 9) < 1e-7);
    CHECK(max_grad_error({a}, [](Tape& t, std::vector<Var>& v) { return t.exp(v[0]); }, 10) < 1e-7);
    CHECK(max_grad_error({a}, [](Tape& t, std::vector<Var>& v) { return t.mean_square(v[0]); }, 11) < 1e-7);
    CHECK(max_grad_error({a}, [&](Tape& t, std::vector<Var>& v) { return t.mse(v[0], b); }, 12) < 1e-7);
  }

  TEST_CASE("relu away from the kink") {
    Rng rng(21);
    Matrix a = random_matrix(4, 4, rng);
    for (Eigen::Index i = 0; i < a.size(); ++i)
      if (std::abs(a.data()[i]) < 0.1) a.data()[i] = 0.5;
    CHECK(max_grad_error({a}, [](Tape& t, std::vector<Var>& v) { return t.relu(v[0]); }, 13) < 1e-7);
  }

  TEST_CASE("layer norm") {
    Rng rng(22);
    const Matrix x = random_matrix(5, 6, rng), g = random_matrix(1, 6, rng), b = random_matrix(1, 6, rng);
    CHECK(max_grad_error({x, g, b}, [](Tape& t, std::vector<Var>& v) { return t.layer_norm(v[0], v[1], v[2]); }, 14) <
          1e-6);
  }

  TEST_CASE("attention gradients and forward against the serial oracle") {
    Rng rng(23);
    const int batch = 2, nq = 3, nk = 4, d = 8, heads = 2;
    const Matrix q = random_matrix(batch * nq, d, rng), k = random_matrix(batch * nk, d, rng),
                 v = random_matrix(batch * nk, d, rng);
    CHECK(max_grad_error({q, k, v},
                         [&](Tape& t, std::vector<Var>& in) { return t.attention(in[0], in[1], in[2], heads, batch, nq, nk); },
                         15) < 1e-7);
    Tape tape;
    const Matrix out = tape.value(tape.attention(tape.constant(q), tape.constant(k), tape.constant(v), heads, batch, nq, nk));
    for (int b = 0; b < batch; ++b) {
      auto flat = [](const Matrix& m, int start, int rows) {
        return std::vector<double>(m.data() + start * m.cols(), m.data() + (start + rows) * m.cols());
      };
      const auto want = ref::attention(flat(q, b * nq, nq), flat(k, b * nk, nk), flat(v, b * nk, nk), nq, nk, d, heads);
      for (int i = 0; i < nq * d; ++i) CHECK(std::abs(out.data()[b * nq * d + i] - want[i]) < 1e-12);
    }
  }

  TEST_CASE("row plumbing ops") {
    Rng rng(24);
    const Matrix a = random_matrix(6, 3, rng), b = random_matrix(2, 3, rng), c = random_matrix(6, 2, rng);
    CHECK(max_grad_error({a}, [](Tape& t, std::vector<Var>& v) { return t.rows(v[0], 2, 3); }, 16) < 1e-7);
    CHECK(max_grad_error({a}, [](Tape& t, std::vector<Var>& v) { return t.gather_rows(v[0], {5, 0, 0, 3}); }, 17) <
          1e-7);
    CHECK(max_grad_error({a, b},
                         [](Tape& t, std::vector<Var>& v) {
                           const std::vector<Var> parts{v[0], v[1]};
                           return t.concat_rows(parts);
                         },
                         18) < 1e-7);
    CHECK(max_grad_error({a, c},
                         [](Tape& t, std::vector<Var>& v) {
                           const std::vector<Var> parts{v[0], v[1]};
                           return t.concat_cols(parts);
                         },
                         19) < 1e-7);
    CHECK(max_grad_error({b}, [](Tape& t, std::vector<Var>& v) { return t.repeat_rows(v[0], 3); }, 20) < 1e-7);
    CHECK(max_grad_error({a}, [](Tape& t, std::vector<Var>& v) { return t.max_pool_rows(v[0], 3); }, 21) < 1e-7);
  }

  TEST_CASE("gaussian kl matches its closed form and gradient") {
    Rng rng(25);
    const Matrix mu = random_matrix(3, 4, rng), lv = random_matrix(3, 4, rng, 0.5);
    Tape tape;
    const double kl = tape.scalar(tape.gaussian_kl(tape.constant(mu), tape.constant(lv)));
    double want = 0.0;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 4; ++c) want += 0.5 * (mu(r, c) * mu(r, c) + std::exp(lv(r, c)) - 1 - lv(r, c)) / 3.0;
    CHECK(kl == doctest::Approx(want).epsilon(1e-12));
    CHECK(max_grad_error({mu, lv}, [](Tape& t, std::vector<Var>& v) { return t.gaussian_kl(v[0], v[1]); }, 22) < 1e-7);
  }

  TEST_CASE("forward kinematics node") {
    const auto body = BodyModel::humanoid();
    Rng rng(26);
    const Matrix poses = random_matrix(2, body.pose_width(), rng, 0.4);
    CHECK(max_grad_error({poses}, [&](Tape& t, std::vector<Var>& v) { return t.forward_kinematics(v[0], body); }, 23) <
          1e-6);
    Tape tape;
    const Matrix x = tape.value(tape.forward_kinematics(tape.constant(poses), body));
    const Joints want = forward_kinematics(poses.row(1).transpose(), body);
    for (int j = 0; j < 24; ++j) CHECK((x.block(1, 3 * j, 1, 3) - want.row(j)).norm() < 1e-12);
  }

  TEST_CASE("parameter store serialization and hashing") {
    nn::ParameterStore store;
    Rng rng(27);
    store.add("enc.w", random_matrix(3, 2, rng));
    store.add("dec.w", random_matrix(2, 2, rng));
    store.quantize_to_float();
    CHECK(store.scalar_count() == 10);
    const auto blob = store.to_floats();
    nn::ParameterStore copy = store;
    for (auto& p : copy.all()) p.value.setZero();
    copy.from_floats(blob);
    CHECK(copy.to_floats() == blob);
    CHECK(copy.hash() == store.hash());
    const std::string enc = store.hash("enc."), dec = store.hash("dec.");
    copy[1].value(0, 0) += 1.0;
    CHECK(copy.hash("enc.") == enc);
    CHECK(copy.hash("dec.") != dec);
    CHECK(enc.size() == 64);
  }

  TEST_CASE("cosine learning-rate decay") {
    CHECK(nn::cosine_lr(0.1, 0, 100) == doctest::Approx(0.1));
    CHECK(nn::cosine_lr(0.1, 50, 100) == doctest::Approx(0.05));
    CHECK(nn::cosine_lr(0.1, 100, 100) == doctest::Approx(0.0).epsilon(1e-12));
    for (int s = 1; s <= 100; ++s) CHECK(nn::cosine_lr(0.1, s, 100) <= nn::cosine_lr(0.1, s - 1, 100));
    CHECK(nn::cosine_lr(0.1, 5, 0) == 0.1);
  }
}
