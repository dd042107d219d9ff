#include "socialego/nn/layers.hpp"

#include <cmath>
#include <numbers>

#include "socialego/errors.hpp"

namespace socialego::nn {

Linear Linear::create(ParameterStore& store, const std::string& name, int in, int out, Rng& rng, double gain) {
  const double bound = gain / std::sqrt(static_cast<double>(in));
  Matrix w(in, out);
  for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = rng.uniform(-bound, bound);
  Linear l;
  l.in = in;
  l.out = out;
  l.weight = store.add(name + ".weight", std::move(w));
  l.bias = store.add(name + ".bias", Matrix::Zero(1, out));
  return l;
}

Var Linear::operator()(const Context& ctx, Var x) const {
  return ctx.tape.linear(x, ctx.p(weight), ctx.p(bias));
}

LayerNorm LayerNorm::create(ParameterStore& store, const std::string& name, int width) {
  LayerNorm n;
  n.gamma = store.add(name + ".gamma", Matrix::Ones(1, width));
  n.beta = store.add(name + ".beta", Matrix::Zero(1, width));
  return n;
}

Var LayerNorm::operator()(const Context& ctx, Var x) const {
  return ctx.tape.layer_norm(x, ctx.p(gamma), ctx.p(beta));
}

MultiHeadAttention MultiHeadAttention::create(ParameterStore& store, const std::string& name, int width, int heads,
                                              Rng& rng) {
  if (width % heads != 0) throw InvalidArgument(name + ": width must be divisible by heads");
  MultiHeadAttention a;
  a.heads = heads;
  a.q = Linear::create(store, name + ".q", width, width, rng);
  a.k = Linear::create(store, name + ".k", width, width, rng);
  a.v = Linear::create(store, name + ".v", width, width, rng);
  a.o = Linear::create(store, name + ".o", width, width, rng, 0.5);
  return a;
}

Var MultiHeadAttention::operator()(const Context& ctx, Var queries, Var memory, int batch, int nq, int nk) const {
  const Var Q = q(ctx, queries);
  const Var K = k(ctx, memory);
  const Var V = v(ctx, memory);
  return o(ctx, ctx.tape.attention(Q, K, V, heads, batch, nq, nk));
}

FeedForward FeedForward::create(ParameterStore& store, const std::string& name, int width, int hidden, Rng& rng) {
  FeedForward f;
  f.up = Linear::create(store, name + ".up", width, hidden, rng);
  f.down = Linear::create(store, name + ".down", hidden, width, rng, 0.5);
  return f;
}

Var FeedForward::operator()(const Context& ctx, Var x) const {
  return down(ctx, ctx.tape.gelu(up(ctx, x)));
}

EncoderBlock EncoderBlock::create(ParameterStore& store, const std::string& name, int width, int heads, int hidden,
                                  Rng& rng) {
  EncoderBlock b;
  b.norm_attn = LayerNorm::create(store, name + ".norm_attn", width);
  b.attn = MultiHeadAttention::create(store, name + ".attn", width, heads, rng);
  b.norm_ff = LayerNorm::create(store, name + ".norm_ff", width);
  b.ff = FeedForward::create(store, name + ".ff", width, hidden, rng);
  return b;
}

Var EncoderBlock::operator()(const Context& ctx, Var x, int batch, int tokens) const {
  Tape& t = ctx.tape;
  const Var h = norm_attn(ctx, x);
  x = t.add(x, attn(ctx, h, h, batch, tokens, tokens));
  return t.add(x, ff(ctx, norm_ff(ctx, x)));
}

DecoderBlock DecoderBlock::create(ParameterStore& store, const std::string& name, int width, int heads, int hidden,
                                  Rng& rng) {
  DecoderBlock b;
  b.norm_self = LayerNorm::create(store, name + ".norm_self", width);
  b.self_attn = MultiHeadAttention::create(store, name + ".self_attn", width, heads, rng);
  b.norm_cross = LayerNorm::create(store, name + ".norm_cross", width);
  b.cross_attn = MultiHeadAttention::create(store, name + ".cross_attn", width, heads, rng);
  b.norm_ff = LayerNorm::create(store, name + ".norm_ff", width);
  b.ff = FeedForward::create(store, name + ".ff", width, hidden, rng);
  return b;
}

Var DecoderBlock::operator()(const Context& ctx, Var x, Var memory, int batch, int tokens, int memory_tokens) const {
  Tape& t = ctx.tape;
  const Var h = norm_self(ctx, x);
  x = t.add(x, self_attn(ctx, h, h, batch, tokens, tokens));
  if (memory_tokens > 0)
    x = t.add(x, cross_attn(ctx, norm_cross(ctx, x), memory, batch, tokens, memory_tokens));
  return t.add(x, ff(ctx, norm_ff(ctx, x)));
}

Matrix sinusoidal_encoding(std::span<const int> positions, int width) {
  Matrix out(static_cast<Eigen::Index>(positions.size()), width);
  for (size_t r = 0; r < positions.size(); ++r) {
    for (int i = 0; i < width; i += 2) {
      const double freq = std::pow(10000.0, -static_cast<double>(i) / width);
      const double a = positions[r] * freq;
      out(static_cast<Eigen::Index>(r), i) = std::sin(a);
      if (i + 1 < width) out(static_cast<Eigen::Index>(r), i + 1) = std::cos(a);
    }
  }
  return out;
}

AdamW::AdamW(const ParameterStore& store, AdamWConfig config) : config_(config) {
  for (const auto& p : store.all()) {
    m_.push_back(Matrix::Zero(p.value.rows(), p.value.cols()));
    v_.push_back(Matrix::Zero(p.value.rows(), p.value.cols()));
  }
}

void AdamW::step(ParameterStore& store) {
  auto& params = store.all();
  double scale = 1.0;
  if (config_.clip_norm > 0.0) {
    double sq = 0.0;
    for (const auto& p : params) sq += p.grad.squaredNorm();
    const double norm = std::sqrt(sq);
    if (norm > config_.clip_norm) scale = config_.clip_norm / norm;
  }
  ++steps_;
  const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(steps_));
  const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(steps_));
  for (size_t i = 0; i < params.size(); ++i) {
    auto& p = params[i];
    const Matrix g = p.grad * scale;
    m_[i] = config_.beta1 * m_[i] + (1.0 - config_.beta1) * g;
    v_[i] = config_.beta2 * v_[i] + (1.0 - config_.beta2) * g.cwiseProduct(g);
    p.value *= (1.0 - config_.lr * config_.weight_decay);
    p.value.array() -= config_.lr * (m_[i].array() / bc1) / ((v_[i].array() / bc2).sqrt() + config_.eps);
    p.grad.setZero();
  }
}

double cosine_lr(double base, int step, int total) {
  if (total <= 0) return base;
  return 0.5 * base * (1.0 + std::cos(std::numbers::pi * static_cast<double>(step) / total));
}

}  // namespace socialego::nn
