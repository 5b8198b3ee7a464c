#include "navsec/reasoner.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "navsec/error.hpp"

namespace navsec {
namespace {

constexpr int kPad = 0;

void check_tokens(const ReasonerParams& p, std::span<const int> tokens) {
  if (static_cast<int>(tokens.size()) > kMaxContext) {
    throw Error(ErrorCode::ContextOverflow,
                "prompt of " + std::to_string(tokens.size()) + " tokens exceeds " + std::to_string(kMaxContext));
  }
  for (int t : tokens) {
    if (t < 0 || t >= p.vocab_size) throw Error(ErrorCode::InvalidArgument, "token id out of range");
  }
}

std::vector<double> lookup(const ReasonerParams& p, std::span<const int> tokens) {
  const int d = p.dim;
  std::vector<double> x(tokens.size() * static_cast<std::size_t>(d), 0.0);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i] == kPad) continue;
    std::copy_n(p.emb.begin() + static_cast<std::ptrdiff_t>(tokens[i]) * d, d, x.begin() + static_cast<std::ptrdiff_t>(i) * d);
  }
  return x;
}

/// out += W^T g for W (rows x cols)
void project_t(const std::vector<double>& w, int rows, int cols, const double* g, double* out) {
  for (int r = 0; r < rows; ++r) {
    const double gr = g[r];
    if (gr == 0.0) continue;
    const double* wr = w.data() + static_cast<std::size_t>(r) * cols;
    for (int c = 0; c < cols; ++c) out[c] += wr[c] * gr;
  }
}

/// dW += g (rows) outer x (cols)
void outer_add(std::vector<double>& dw, int rows, int cols, const double* g, const double* x) {
  for (int r = 0; r < rows; ++r) {
    const double gr = g[r];
    if (gr == 0.0) continue;
    double* wr = dw.data() + static_cast<std::size_t>(r) * cols;
    for (int c = 0; c < cols; ++c) wr[c] += gr * x[c];
  }
}

struct Pass {
  ActionDist probs{};
  double loss = 0.0;
  std::vector<double> dx;  // n x d, filled on request
};

/// Full forward pass, optionally followed by the backward pass into `grads`
/// and/or the input-embedding gradient.
Pass run(const ReasonerParams& p, std::span<const int> tokens, std::span<const double> x, const Action* action,
         bool want_dx, ReasonerParams* grads) {
  const int n = static_cast<int>(tokens.size());
  const int d = p.dim;
  const int w0 = window_start(p, tokens);
  std::vector<int> pool_positions;
  for (int i = w0; i < n; ++i) {
    if (tokens[static_cast<std::size_t>(i)] != kPad) pool_positions.push_back(i);
  }
  const double inv_count = pool_positions.empty() ? 0.0 : 1.0 / static_cast<double>(pool_positions.size());

  std::vector<double> pooled(static_cast<std::size_t>(d), 0.0);
  std::vector<double> h, k, v;
  if (p.arch == Arch::Linear) {
    for (int i : pool_positions) {
      for (int c = 0; c < d; ++c) pooled[c] += x[static_cast<std::size_t>(i) * d + c];
    }
  } else {
    h.assign(static_cast<std::size_t>(n) * d, 0.0);
    k.assign(h.size(), 0.0);
    v.assign(h.size(), 0.0);
    for (int i = 0; i < n; ++i) {
      detail::conv_position(p, x.data(), i, &h[static_cast<std::size_t>(i) * d]);
      detail::project(p.wk, d, d, &h[static_cast<std::size_t>(i) * d], &k[static_cast<std::size_t>(i) * d]);
      detail::project(p.wv, d, d, &h[static_cast<std::size_t>(i) * d], &v[static_cast<std::size_t>(i) * d]);
    }
    std::vector<double> z(static_cast<std::size_t>(d)), scratch(static_cast<std::size_t>(n + 1 + 2 * d));
    for (int i : pool_positions) {
      detail::attend(p, tokens, &h[static_cast<std::size_t>(i) * d], k.data(), v.data(), i, z.data(), scratch.data());
      for (int c = 0; c < d; ++c) pooled[c] += z[c];
    }
  }
  for (auto& c : pooled) c *= inv_count;

  Pass out;
  out.probs = detail::head(p, pooled.data());
  if (action == nullptr) return out;
  const int a = index_of(*action);
  out.loss = -std::log(out.probs[static_cast<std::size_t>(a)]);
  if (!want_dx && grads == nullptr) return out;

  // Head backward.
  std::array<double, kNumActions> g{};
  for (int i = 0; i < kNumActions; ++i) g[i] = out.probs[i] - (i == a ? 1.0 : 0.0);
  std::vector<double> dpool(static_cast<std::size_t>(d), 0.0);
  if (p.arch == Arch::Linear) {
    if (grads) {
      outer_add(grads->w2, kNumActions, d, g.data(), pooled.data());
      for (int i = 0; i < kNumActions; ++i) grads->b2[i] += g[i];
    }
    project_t(p.w2, kNumActions, d, g.data(), dpool.data());
  } else {
    const int hd = p.hidden;
    std::vector<double> u(static_cast<std::size_t>(hd));
    detail::project(p.w1, hd, d, pooled.data(), u.data());
    for (int j = 0; j < hd; ++j) u[j] = std::tanh(u[j] + p.b1[j]);
    std::vector<double> du(static_cast<std::size_t>(hd), 0.0);
    project_t(p.w2, kNumActions, hd, g.data(), du.data());
    for (int j = 0; j < hd; ++j) du[j] *= 1.0 - u[j] * u[j];
    if (grads) {
      outer_add(grads->w2, kNumActions, hd, g.data(), u.data());
      for (int i = 0; i < kNumActions; ++i) grads->b2[i] += g[i];
      outer_add(grads->w1, hd, d, du.data(), pooled.data());
      for (int j = 0; j < hd; ++j) grads->b1[j] += du[j];
    }
    project_t(p.w1, hd, d, du.data(), dpool.data());
  }
  for (auto& c : dpool) c *= inv_count;

  std::vector<double> dx(static_cast<std::size_t>(n) * d, 0.0);
  if (p.arch == Arch::Linear) {
    for (int i : pool_positions) std::copy(dpool.begin(), dpool.end(), dx.begin() + static_cast<std::ptrdiff_t>(i) * d);
  } else {
    const double scale = 1.0 / std::sqrt(static_cast<double>(d));
    std::vector<double> dh(static_cast<std::size_t>(n) * d, 0.0), dk(dh.size(), 0.0), dv(dh.size(), 0.0);
    std::vector<double> q(static_cast<std::size_t>(d)), c(static_cast<std::size_t>(d)), dc(static_cast<std::size_t>(d));
    std::vector<double> dq(static_cast<std::size_t>(d)), att(static_cast<std::size_t>(n)), datt(static_cast<std::size_t>(n));
    for (int i : pool_positions) {
      const double* hi = &h[static_cast<std::size_t>(i) * d];
      for (int cc = 0; cc < d; ++cc) dh[static_cast<std::size_t>(i) * d + cc] += dpool[cc];
      detail::project(p.wq, d, d, hi, q.data());
      double mx = -INFINITY;
      for (int j = 0; j <= i; ++j) {
        if (tokens[static_cast<std::size_t>(j)] == kPad) continue;
        double s = 0.0;
        for (int cc = 0; cc < d; ++cc) s += q[cc] * k[static_cast<std::size_t>(j) * d + cc];
        att[j] = s * scale;
        mx = std::max(mx, att[j]);
      }
      double total = 0.0;
      for (int j = 0; j <= i; ++j) {
        if (tokens[static_cast<std::size_t>(j)] == kPad) continue;
        att[j] = std::exp(att[j] - mx);
        total += att[j];
      }
      std::fill(c.begin(), c.end(), 0.0);
      for (int j = 0; j <= i; ++j) {
        if (tokens[static_cast<std::size_t>(j)] == kPad) continue;
        att[j] /= total;
        for (int cc = 0; cc < d; ++cc) c[cc] += att[j] * v[static_cast<std::size_t>(j) * d + cc];
      }
      std::fill(dc.begin(), dc.end(), 0.0);
      project_t(p.wo, d, d, dpool.data(), dc.data());
      if (grads) outer_add(grads->wo, d, d, dpool.data(), c.data());
      double mean_datt = 0.0;
      for (int j = 0; j <= i; ++j) {
        if (tokens[static_cast<std::size_t>(j)] == kPad) continue;
        double s = 0.0;
        for (int cc = 0; cc < d; ++cc) {
          s += dc[cc] * v[static_cast<std::size_t>(j) * d + cc];
          dv[static_cast<std::size_t>(j) * d + cc] += att[j] * dc[cc];
        }
        datt[j] = s;
        mean_datt += att[j] * s;
      }
      std::fill(dq.begin(), dq.end(), 0.0);
      for (int j = 0; j <= i; ++j) {
        if (tokens[static_cast<std::size_t>(j)] == kPad) continue;
        const double ds = att[j] * (datt[j] - mean_datt) * scale;
        for (int cc = 0; cc < d; ++cc) {
          dq[cc] += ds * k[static_cast<std::size_t>(j) * d + cc];
          dk[static_cast<std::size_t>(j) * d + cc] += ds * q[cc];
        }
      }
      project_t(p.wq, d, d, dq.data(), &dh[static_cast<std::size_t>(i) * d]);
      if (grads) outer_add(grads->wq, d, d, dq.data(), hi);
    }
    for (int j = 0; j < n; ++j) {
      if (tokens[static_cast<std::size_t>(j)] == kPad) continue;
      const double* hj = &h[static_cast<std::size_t>(j) * d];
      double* dhj = &dh[static_cast<std::size_t>(j) * d];
      project_t(p.wk, d, d, &dk[static_cast<std::size_t>(j) * d], dhj);
      project_t(p.wv, d, d, &dv[static_cast<std::size_t>(j) * d], dhj);
      if (grads) {
        outer_add(grads->wk, d, d, &dk[static_cast<std::size_t>(j) * d], hj);
        outer_add(grads->wv, d, d, &dv[static_cast<std::size_t>(j) * d], hj);
      }
    }
    for (int i = 0; i < n; ++i) {
      for (int t = 0; t < p.taps && t <= i; ++t) {
        const double* w = &p.conv[static_cast<std::size_t>(t) * d];
        const double* dhi = &dh[static_cast<std::size_t>(i) * d];
        const double* xs = &x[static_cast<std::size_t>(i - t) * d];
        double* dxs = &dx[static_cast<std::size_t>(i - t) * d];
        for (int cc = 0; cc < d; ++cc) dxs[cc] += w[cc] * dhi[cc];
        if (grads) {
          double* gw = &grads->conv[static_cast<std::size_t>(t) * d];
          for (int cc = 0; cc < d; ++cc) gw[cc] += dhi[cc] * xs[cc];
        }
      }
    }
  }
  for (int i = 0; i < n; ++i) {
    const int tok = tokens[static_cast<std::size_t>(i)];
    double* dxi = &dx[static_cast<std::size_t>(i) * d];
    if (tok == kPad) {
      std::fill_n(dxi, d, 0.0);
      continue;
    }
    if (grads) {
      double* ge = &grads->emb[static_cast<std::size_t>(tok) * d];
      for (int cc = 0; cc < d; ++cc) ge[cc] += dxi[cc];
    }
  }
  if (want_dx) out.dx = std::move(dx);
  return out;
}

}  // namespace

std::string_view arch_name(Arch a) noexcept { return a == Arch::Linear ? "linear" : "attention"; }

std::optional<Arch> parse_arch(std::string_view s) noexcept {
  if (s == "attention") return Arch::Attention;
  if (s == "linear") return Arch::Linear;
  return std::nullopt;
}

std::vector<std::vector<double>*> ReasonerParams::tensors() {
  if (arch == Arch::Linear) return {&emb, &w2, &b2};
  return {&emb, &conv, &wq, &wk, &wv, &wo, &w1, &b1, &w2, &b2};
}

std::vector<const std::vector<double>*> ReasonerParams::tensors() const {
  auto mut = const_cast<ReasonerParams*>(this)->tensors();
  return {mut.begin(), mut.end()};
}

bool ReasonerParams::all_finite() const {
  for (const auto* t : tensors()) {
    for (double v : *t) {
      if (!std::isfinite(v)) return false;
    }
  }
  return true;
}

ReasonerParams ReasonerParams::zeros_like() const {
  ReasonerParams z = *this;
  for (auto* t : z.tensors()) std::fill(t->begin(), t->end(), 0.0);
  z.queries.reset();
  return z;
}

ReasonerParams init_params(const ReasonerConfig& cfg, int vocab_size, int window_token) {
  if (cfg.dim < 1 || vocab_size < 2 || (cfg.arch == Arch::Attention && (cfg.hidden < 1 || cfg.taps < 1))) {
    throw Error(ErrorCode::InvalidArgument, "invalid reasoner shape");
  }
  ReasonerParams p;
  p.arch = cfg.arch;
  p.vocab_size = vocab_size;
  p.dim = cfg.dim;
  p.seed = cfg.seed;
  p.window_token = window_token;
  const int d = cfg.dim;
  std::mt19937_64 rng(cfg.seed);
  auto gauss = [&](std::size_t count, double sd) {
    std::normal_distribution<double> dist(0.0, sd);
    std::vector<double> out(count);
    for (auto& x : out) x = dist(rng);
    return out;
  };
  const auto dd = static_cast<std::size_t>(d);
  p.emb = gauss(static_cast<std::size_t>(vocab_size) * dd, 1.0);
  std::fill_n(p.emb.begin(), d, 0.0);  // PAD
  if (cfg.arch == Arch::Linear) {
    p.w2 = gauss(kNumActions * dd, 1.0 / std::sqrt(d));
    p.b2.assign(kNumActions, 0.0);
    return p;
  }
  p.hidden = cfg.hidden;
  p.taps = cfg.taps;
  p.conv.assign(static_cast<std::size_t>(cfg.taps) * dd, 0.3);
  std::fill_n(p.conv.begin(), d, 1.0);
  const double sd = 1.0 / std::sqrt(d);
  auto near_identity = [&] {
    auto m = gauss(dd * dd, 0.1 * sd);
    for (int i = 0; i < d; ++i) m[static_cast<std::size_t>(i) * dd + i] += 1.0;
    return m;
  };
  p.wq = near_identity();
  p.wk = near_identity();
  p.wv = gauss(dd * dd, sd);
  p.wo = gauss(dd * dd, sd);
  p.w1 = gauss(static_cast<std::size_t>(cfg.hidden) * dd, sd);
  p.b1.assign(static_cast<std::size_t>(cfg.hidden), 0.0);
  p.w2 = gauss(kNumActions * static_cast<std::size_t>(cfg.hidden), 1.0 / std::sqrt(cfg.hidden));
  p.b2.assign(kNumActions, 0.0);
  return p;
}

int window_start(const ReasonerParams& params, std::span<const int> tokens) noexcept {
  for (int i = static_cast<int>(tokens.size()) - 1; i >= 0; --i) {
    if (tokens[static_cast<std::size_t>(i)] == params.window_token) return i;
  }
  return 0;
}

namespace detail {

void conv_position(const ReasonerParams& p, const double* x, int pos, double* out) {
  const int d = p.dim;
  std::fill_n(out, d, 0.0);
  for (int t = 0; t < p.taps && t <= pos; ++t) {
    const double* w = &p.conv[static_cast<std::size_t>(t) * d];
    const double* xs = x + static_cast<std::size_t>(pos - t) * d;
    for (int c = 0; c < d; ++c) out[c] += w[c] * xs[c];
  }
}

void project(const std::vector<double>& w, int rows, int cols, const double* in, double* out) {
  for (int r = 0; r < rows; ++r) {
    const double* wr = w.data() + static_cast<std::size_t>(r) * cols;
    double s = 0.0;
    for (int c = 0; c < cols; ++c) s += wr[c] * in[c];
    out[r] = s;
  }
}

void attend(const ReasonerParams& p, std::span<const int> tokens, const double* h_pos, const double* keys,
            const double* values, int pos, double* z_out, double* scratch) {
  const int d = p.dim;
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  double* att = scratch;
  double* q = scratch + pos + 1;
  double* c = q + d;
  project(p.wq, d, d, h_pos, q);
  double mx = -INFINITY;
  for (int j = 0; j <= pos; ++j) {
    if (tokens[static_cast<std::size_t>(j)] == kPad) continue;
    const double* kj = keys + static_cast<std::size_t>(j) * d;
    double s = 0.0;
    for (int cc = 0; cc < d; ++cc) s += q[cc] * kj[cc];
    att[j] = s * scale;
    mx = std::max(mx, att[j]);
  }
  double total = 0.0;
  for (int j = 0; j <= pos; ++j) {
    if (tokens[static_cast<std::size_t>(j)] == kPad) continue;
    att[j] = std::exp(att[j] - mx);
    total += att[j];
  }
  std::fill_n(c, d, 0.0);
  for (int j = 0; j <= pos; ++j) {
    if (tokens[static_cast<std::size_t>(j)] == kPad) continue;
    const double a = att[j] / total;
    const double* vj = values + static_cast<std::size_t>(j) * d;
    for (int cc = 0; cc < d; ++cc) c[cc] += a * vj[cc];
  }
  project(p.wo, d, d, c, z_out);
  for (int cc = 0; cc < d; ++cc) z_out[cc] += h_pos[cc];
}

ActionDist head(const ReasonerParams& p, const double* pooled) {
  std::array<double, kNumActions> logits{};
  if (p.arch == Arch::Linear) {
    project(p.w2, kNumActions, p.dim, pooled, logits.data());
  } else {
    std::vector<double> u(static_cast<std::size_t>(p.hidden));
    project(p.w1, p.hidden, p.dim, pooled, u.data());
    for (int j = 0; j < p.hidden; ++j) u[j] = std::tanh(u[j] + p.b1[j]);
    project(p.w2, kNumActions, p.hidden, u.data(), logits.data());
  }
  double mx = -INFINITY;
  for (int i = 0; i < kNumActions; ++i) {
    logits[i] += p.b2[i];
    mx = std::max(mx, logits[i]);
  }
  ActionDist out{};
  double total = 0.0;
  for (int i = 0; i < kNumActions; ++i) {
    out[i] = std::exp(logits[i] - mx);
    total += out[i];
  }
  for (auto& v : out) v /= total;
  return out;
}

}  // namespace detail

ActionDist forward(const ReasonerParams& params, std::span<const int> tokens) {
  check_tokens(params, tokens);
  params.queries.forward.fetch_add(1, std::memory_order_relaxed);
  return run(params, tokens, lookup(params, tokens), nullptr, false, nullptr).probs;
}

ActionDist forward_from_embeddings(const ReasonerParams& params, std::span<const int> tokens,
                                   std::span<const double> embeddings) {
  check_tokens(params, tokens);
  if (embeddings.size() != tokens.size() * static_cast<std::size_t>(params.dim)) {
    throw Error(ErrorCode::InvalidArgument, "embedding matrix shape mismatch");
  }
  std::vector<double> x(embeddings.begin(), embeddings.end());
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i] == kPad) std::fill_n(x.begin() + static_cast<std::ptrdiff_t>(i) * params.dim, params.dim, 0.0);
  }
  params.queries.forward.fetch_add(1, std::memory_order_relaxed);
  return run(params, tokens, x, nullptr, false, nullptr).probs;
}

Action predict_action(const ActionDist& dist) noexcept {
  int best = 0;
  for (int i = 1; i < kNumActions; ++i) {
    if (dist[i] > dist[best]) best = i;
  }
  return static_cast<Action>(best);
}

Action predict(const ReasonerParams& params, std::span<const int> tokens) {
  return predict_action(forward(params, tokens));
}

double loss(const ReasonerParams& params, std::span<const int> tokens, Action action) {
  return -std::log(forward(params, tokens)[static_cast<std::size_t>(index_of(action))]);
}

std::vector<double> embedding_gradient(const ReasonerParams& params, std::span<const int> tokens, Action action) {
  check_tokens(params, tokens);
  params.queries.gradient.fetch_add(1, std::memory_order_relaxed);
  return run(params, tokens, lookup(params, tokens), &action, true, nullptr).dx;
}

OneHotGradient grad_onehot(const ReasonerParams& params, std::span<const int> tokens, Action action) {
  const auto dx = embedding_gradient(params, tokens, action);
  const int n = static_cast<int>(tokens.size());
  const int d = params.dim;
  const int vsz = params.vocab_size;
  OneHotGradient g;
  g.positions = n;
  g.vocab = vsz;
  g.data.assign(static_cast<std::size_t>(n) * vsz, 0.0);
  for (int i = 0; i < n; ++i) {
    const double* dxi = &dx[static_cast<std::size_t>(i) * d];
    if (tokens[static_cast<std::size_t>(i)] == kPad) continue;
    double* row = &g.data[static_cast<std::size_t>(i) * vsz];
    for (int t = 0; t < vsz; ++t) {
      const double* e = &params.emb[static_cast<std::size_t>(t) * d];
      double s = 0.0;
      for (int c = 0; c < d; ++c) s += e[c] * dxi[c];
      row[t] = s;
    }
  }
  return g;
}

double accumulate_gradients(const ReasonerParams& params, std::span<const int> tokens, Action action,
                            ReasonerParams& grads) {
  check_tokens(params, tokens);
  return run(params, tokens, lookup(params, tokens), &action, false, &grads).loss;
}

}  // namespace navsec
