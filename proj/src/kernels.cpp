#include "navsec/kernels.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <string>

#include "navsec/error.hpp"

namespace navsec {

int configure_threads() {
  if (const char* env = std::getenv("NAVSEC_THREADS")) {
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && n > 0) omp_set_num_threads(static_cast<int>(n));
  }
  return omp_get_max_threads();
}

int configured_threads() { return omp_get_max_threads(); }

CandidateEvaluator::CandidateEvaluator(const ReasonerParams& params, std::span<const int> base, int vary_begin,
                                       int vary_end)
    : p_(params), base_(base.begin(), base.end()), vb_(vary_begin), ve_(vary_end),
      n_(static_cast<int>(base.size())), d_(params.dim) {
  if (vb_ < 0 || ve_ < vb_ || ve_ > n_) throw Error(ErrorCode::InvalidArgument, "vary range out of bounds");
  if (n_ > kMaxContext) throw Error(ErrorCode::ContextOverflow, "candidate base exceeds context");
  const auto d = static_cast<std::size_t>(d_);
  x_.assign(static_cast<std::size_t>(n_) * d, 0.0);
  for (int i = 0; i < n_; ++i) {
    if (base_[static_cast<std::size_t>(i)] == 0) continue;
    std::copy_n(p_.emb.begin() + static_cast<std::ptrdiff_t>(base_[static_cast<std::size_t>(i)]) * d_, d_,
                x_.begin() + static_cast<std::ptrdiff_t>(i) * d_);
  }
  if (p_.arch == Arch::Linear) return;

  h_.assign(x_.size(), 0.0);
  k_.assign(x_.size(), 0.0);
  v_.assign(x_.size(), 0.0);
  for (int i = 0; i < n_; ++i) {
    detail::conv_position(p_, x_.data(), i, &h_[static_cast<std::size_t>(i) * d]);
    detail::project(p_.wk, d_, d_, &h_[static_cast<std::size_t>(i) * d], &k_[static_cast<std::size_t>(i) * d]);
    detail::project(p_.wv, d_, d_, &h_[static_cast<std::size_t>(i) * d], &v_[static_cast<std::size_t>(i) * d]);
  }
  fixed_w0_ = window_start(p_, std::span<const int>(base_).first(static_cast<std::size_t>(vb_)));
  prefix_pool_.assign(d, 0.0);
  std::vector<double> z(d), scratch(static_cast<std::size_t>(n_ + 1) + 2 * d);
  for (int i = fixed_w0_; i < vb_; ++i) {
    if (base_[static_cast<std::size_t>(i)] == 0) continue;
    detail::attend(p_, base_, &h_[static_cast<std::size_t>(i) * d], k_.data(), v_.data(), i, z.data(),
                   scratch.data());
    for (std::size_t c = 0; c < d; ++c) prefix_pool_[c] += z[c];
  }
  prefix_valid_ = true;
}

ActionDist CandidateEvaluator::evaluate(std::span<const int> tokens) const {
  if (static_cast<int>(tokens.size()) != n_) throw Error(ErrorCode::InvalidArgument, "candidate length differs");
  const auto d = static_cast<std::size_t>(d_);
  const int w0 = window_start(p_, tokens);
  int count = 0;
  for (int i = w0; i < n_; ++i) count += tokens[static_cast<std::size_t>(i)] != 0;
  const double inv_count = count == 0 ? 0.0 : 1.0 / static_cast<double>(count);

  thread_local std::vector<double> x, h, k, v, z, scratch, pooled;
  x = x_;
  for (int i = vb_; i < ve_; ++i) {
    const int tok = tokens[static_cast<std::size_t>(i)];
    if (tok < 0 || tok >= p_.vocab_size) throw Error(ErrorCode::InvalidArgument, "token id out of range");
    double* row = &x[static_cast<std::size_t>(i) * d];
    if (tok == 0) {
      std::fill_n(row, d, 0.0);
    } else {
      std::copy_n(p_.emb.begin() + static_cast<std::ptrdiff_t>(tok) * d_, d_, row);
    }
  }
  pooled.assign(d, 0.0);

  if (p_.arch == Arch::Linear) {
    for (int i = w0; i < n_; ++i) {
      if (tokens[static_cast<std::size_t>(i)] == 0) continue;
      for (std::size_t c = 0; c < d; ++c) pooled[c] += x[static_cast<std::size_t>(i) * d + c];
    }
  } else {
    h = h_;
    k = k_;
    v = v_;
    const int touched_end = std::min(n_, ve_ + p_.taps - 1);
    for (int i = vb_; i < touched_end; ++i) {
      detail::conv_position(p_, x.data(), i, &h[static_cast<std::size_t>(i) * d]);
      detail::project(p_.wk, d_, d_, &h[static_cast<std::size_t>(i) * d], &k[static_cast<std::size_t>(i) * d]);
      detail::project(p_.wv, d_, d_, &h[static_cast<std::size_t>(i) * d], &v[static_cast<std::size_t>(i) * d]);
    }
    z.resize(d);
    scratch.resize(static_cast<std::size_t>(n_ + 1) + 2 * d);
    int from = w0;
    if (w0 < vb_ && prefix_valid_) {
      pooled = prefix_pool_;
      from = vb_;
    }
    for (int i = from; i < n_; ++i) {
      if (tokens[static_cast<std::size_t>(i)] == 0) continue;
      detail::attend(p_, tokens, &h[static_cast<std::size_t>(i) * d], k.data(), v.data(), i, z.data(),
                     scratch.data());
      for (std::size_t c = 0; c < d; ++c) pooled[c] += z[c];
    }
  }
  for (auto& c : pooled) c *= inv_count;
  return detail::head(p_, pooled.data());
}

ActionDist CandidateEvaluator::evaluate(const Candidate& c) const {
  if (c.position < vb_ || c.position >= ve_) throw Error(ErrorCode::InvalidArgument, "candidate outside vary range");
  thread_local std::vector<int> tokens;
  tokens = base_;
  tokens[static_cast<std::size_t>(c.position)] = c.token;
  return evaluate(tokens);
}

double ObjectiveSpec::operator()(const ActionDist& d) const {
  const double lp = std::log(d[static_cast<std::size_t>(target)]);
  return force ? -lp : lp;
}

std::vector<double> score_candidates_reference(const ReasonerParams& params, std::span<const int> base,
                                               std::span<const Candidate> candidates, const ObjectiveSpec& obj) {
  std::vector<double> out;
  out.reserve(candidates.size());
  std::vector<int> tokens(base.begin(), base.end());
  for (const auto& c : candidates) {
    const int saved = tokens[static_cast<std::size_t>(c.position)];
    tokens[static_cast<std::size_t>(c.position)] = c.token;
    out.push_back(obj(forward(params, tokens)));
    tokens[static_cast<std::size_t>(c.position)] = saved;
  }
  return out;
}

std::vector<double> score_candidates_serial(const CandidateEvaluator& eval, std::span<const Candidate> candidates,
                                            const ObjectiveSpec& obj) {
  eval.params().queries.forward.fetch_add(candidates.size(), std::memory_order_relaxed);
  std::vector<double> out(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) out[i] = obj(eval.evaluate(candidates[i]));
  return out;
}

std::vector<double> score_candidates_parallel(const CandidateEvaluator& eval, std::span<const Candidate> candidates,
                                              const ObjectiveSpec& obj) {
  eval.params().queries.forward.fetch_add(candidates.size(), std::memory_order_relaxed);
  std::vector<double> out(candidates.size());
  const auto n = static_cast<long>(candidates.size());
  std::exception_ptr failure;
#pragma omp parallel for schedule(static)
  for (long i = 0; i < n; ++i) {
    try {
      out[static_cast<std::size_t>(i)] = obj(eval.evaluate(candidates[static_cast<std::size_t>(i)]));
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

std::size_t argmin_stable(std::span<const double> scores) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] < scores[best]) best = i;
  }
  return best;
}

}  // namespace navsec
