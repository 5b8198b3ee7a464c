#pragma once

#include <array>
#include <atomic>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "navsec/world.hpp"

namespace navsec {

enum class Arch : std::uint32_t { Attention = 0, Linear = 1 };

std::string_view arch_name(Arch a) noexcept;
std::optional<Arch> parse_arch(std::string_view s) noexcept;

inline constexpr int kMaxContext = 512;

/// Call counters for the black-box contract checks. Copies snapshot the values.
struct QueryCounter {
  std::atomic<std::uint64_t> gradient{0};
  std::atomic<std::uint64_t> forward{0};

  QueryCounter() = default;
  QueryCounter(const QueryCounter& o) : gradient(o.gradient.load()), forward(o.forward.load()) {}
  QueryCounter& operator=(const QueryCounter& o) {
    gradient = o.gradient.load();
    forward = o.forward.load();
    return *this;
  }
  void reset() {
    gradient = 0;
    forward = 0;
  }
};

struct ReasonerConfig {
  Arch arch = Arch::Attention;
  int dim = 32;
  int hidden = 64;
  int taps = 4;
  std::uint64_t seed = 1;
};

/// Parameters of the action reasoner. Matrices are row-major (rows = outputs).
///
/// Attention architecture, for tokens x_0..x_{n-1}:
///   e_p  = E[x_p] (zero for PAD)
///   h_p  = sum_j conv[j] * e_{p-j}                     depthwise causal conv
///   z_p  = h_p + Wo * attn_p(Wq h_p; Wk h_{<=p}; Wv h_{<=p})
///   pool = mean of z_p over the decision window
///   logits = W2 tanh(W1 pool + b1) + b2
/// The decision window runs from the last step-marker token to the end of
/// the sequence (the whole sequence when no marker is present).
/// Linear architecture: z_p = e_p and logits = W2 pool + b2.
struct ReasonerParams {
  Arch arch = Arch::Attention;
  int vocab_size = 0;
  int dim = 0;
  int hidden = 0;
  int taps = 0;
  int window_token = -1;
  std::uint64_t seed = 0;
  std::string training_mode = "init";

  std::vector<double> emb, conv, wq, wk, wv, wo, w1, b1, w2, b2;

  mutable QueryCounter queries;

  /// Tensors in checkpoint order.
  std::vector<std::vector<double>*> tensors();
  std::vector<const std::vector<double>*> tensors() const;
  bool all_finite() const;
  /// Same architecture and shapes, all tensors zero.
  ReasonerParams zeros_like() const;
};

ReasonerParams init_params(const ReasonerConfig& cfg, int vocab_size, int window_token);

using ActionDist = std::array<double, kNumActions>;

/// Row p holds dL/d(one-hot indicator of position p), length vocab_size.
struct OneHotGradient {
  int positions = 0;
  int vocab = 0;
  std::vector<double> data;

  std::span<const double> row(int p) const {
    return std::span<const double>(data).subspan(static_cast<std::size_t>(p) * vocab,
                                                 static_cast<std::size_t>(vocab));
  }
};

ActionDist forward(const ReasonerParams& params, std::span<const int> tokens);
/// Forward pass on explicit input embeddings (n x dim, row-major) in place of
/// E[x_p]. PAD masking and the decision window still follow `tokens`.
ActionDist forward_from_embeddings(const ReasonerParams& params, std::span<const int> tokens,
                                   std::span<const double> embeddings);
Action predict_action(const ActionDist& dist) noexcept;
Action predict(const ReasonerParams& params, std::span<const int> tokens);
double loss(const ReasonerParams& params, std::span<const int> tokens, Action action);

/// dL/d(input embedding) per position, n x dim row-major.
std::vector<double> embedding_gradient(const ReasonerParams& params, std::span<const int> tokens,
                                       Action action);
OneHotGradient grad_onehot(const ReasonerParams& params, std::span<const int> tokens, Action action);

/// Adds dL/dtheta for one example into `grads` and returns the loss.
double accumulate_gradients(const ReasonerParams& params, std::span<const int> tokens, Action action,
                            ReasonerParams& grads);

/// First index of the decision window.
int window_start(const ReasonerParams& params, std::span<const int> tokens) noexcept;

/// Shared intermediate values of an attention forward pass, used by the
/// candidate kernels to reuse work on positions a perturbation cannot reach.
namespace detail {
/// h_pos from masked input embeddings x (n x dim).
void conv_position(const ReasonerParams& p, const double* x, int pos, double* out);
void project(const std::vector<double>& w, int rows, int cols, const double* in, double* out);
/// z_pos = h_pos + Wo * attention output; keys/values hold rows 0..pos.
/// `scratch` needs pos + 1 + 2 * dim doubles.
void attend(const ReasonerParams& p, std::span<const int> tokens, const double* h_pos, const double* keys,
            const double* values, int pos, double* z_out, double* scratch);
ActionDist head(const ReasonerParams& p, const double* pooled);
}  // namespace detail

}  // namespace navsec
