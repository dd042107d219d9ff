#pragma once

#include <string>

#include "socialego/nn/tape.hpp"
#include "socialego/rng.hpp"

namespace socialego::nn {

// Binds a parameter store to a tape for one forward pass. Without a
// gradient sink the store's parameters enter the tape as constants.
struct Context {
  Tape& tape;
  const ParameterStore& store;
  ParameterStore* grads = nullptr;

  Var p(ParameterStore::Id id) const {
    return grads ? tape.param(*grads, id) : tape.constant(store[id].value);
  }
};

struct Linear {
  ParameterStore::Id weight = 0, bias = 0;
  int in = 0, out = 0;

  static Linear create(ParameterStore& store, const std::string& name, int in, int out, Rng& rng,
                       double gain = 1.0);
  Var operator()(const Context& ctx, Var x) const;
};

struct LayerNorm {
  ParameterStore::Id gamma = 0, beta = 0;

  static LayerNorm create(ParameterStore& store, const std::string& name, int width);
  Var operator()(const Context& ctx, Var x) const;
};

struct MultiHeadAttention {
  Linear q, k, v, o;
  int heads = 1;

  static MultiHeadAttention create(ParameterStore& store, const std::string& name, int width, int heads,
                                   Rng& rng);
  Var operator()(const Context& ctx, Var queries, Var memory, int batch, int nq, int nk) const;
};

struct FeedForward {
  Linear up, down;

  static FeedForward create(ParameterStore& store, const std::string& name, int width, int hidden, Rng& rng);
  Var operator()(const Context& ctx, Var x) const;
};

// Pre-norm transformer block: self-attention then feed-forward.
struct EncoderBlock {
  LayerNorm norm_attn, norm_ff;
  MultiHeadAttention attn;
  FeedForward ff;

  static EncoderBlock create(ParameterStore& store, const std::string& name, int width, int heads, int hidden,
                             Rng& rng);
  Var operator()(const Context& ctx, Var x, int batch, int tokens) const;
};

// Pre-norm block with self-attention, cross-attention against a memory, and
// feed-forward.
struct DecoderBlock {
  LayerNorm norm_self, norm_cross, norm_ff;
  MultiHeadAttention self_attn, cross_attn;
  FeedForward ff;

  static DecoderBlock create(ParameterStore& store, const std::string& name, int width, int heads, int hidden,
                             Rng& rng);
  Var operator()(const Context& ctx, Var x, Var memory, int batch, int tokens, int memory_tokens) const;
};

// Sinusoidal encoding of integer positions (frames or timesteps), one row
// per position.
Matrix sinusoidal_encoding(std::span<const int> positions, int width);

struct AdamWConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
  double clip_norm = 1.0;  // <= 0 disables global-norm clipping
};

// Cosine decay from base at step 0 to zero after total steps.
double cosine_lr(double base, int step, int total);

class AdamW {
 public:
  AdamW(const ParameterStore& store, AdamWConfig config);

  // Applies one update from the gradients accumulated in store, then zeroes them.
  void step(ParameterStore& store);

  const AdamWConfig& config() const { return config_; }
  void set_lr(double lr) { config_.lr = lr; }

 private:
  AdamWConfig config_;
  std::vector<Matrix> m_, v_;
  long steps_ = 0;
};

}  // namespace socialego::nn
