#pragma once

#include <span>
#include <vector>

#include "navsec/reasoner.hpp"

namespace navsec {

/// Worker count from NAVSEC_THREADS (unset or invalid: OpenMP default).
/// Applies the cap to the OpenMP runtime and returns it.
int configure_threads();
int configured_threads();

/// Single-token substitution relative to a base sequence.
struct Candidate {
  int position = 0;
  int token = 0;
};

/// Scores many sequences that differ from `base` only inside [vary_begin,
/// vary_end). Work on positions the varying range cannot influence (input
/// rows, conv outputs, keys, values and decision-window outputs before the
/// range) is done once. Results are bit-identical to `forward`.
class CandidateEvaluator {
 public:
  CandidateEvaluator(const ReasonerParams& params, std::span<const int> base, int vary_begin, int vary_end);

  ActionDist evaluate(std::span<const int> tokens) const;
  ActionDist evaluate(const Candidate& c) const;

  const std::vector<int>& base() const { return base_; }
  const ReasonerParams& params() const { return p_; }

 private:
  const ReasonerParams& p_;
  std::vector<int> base_;
  int vb_, ve_, n_, d_;
  int fixed_w0_ = 0;
  std::vector<double> x_, h_, k_, v_;
  std::vector<double> prefix_pool_;  // running sum of window outputs before vary_begin
  bool prefix_valid_ = false;
};

/// Objective functor: lower is better.
struct ObjectiveSpec {
  bool force = true;
  int target = 0;  // action index whose -log p is minimized (force) or log p (suppress)
  double operator()(const ActionDist& d) const;
};

/// Reference: each candidate scored by a full forward pass, in order.
std::vector<double> score_candidates_reference(const ReasonerParams& params, std::span<const int> base,
                                               std::span<const Candidate> candidates, const ObjectiveSpec& obj);
/// Cached kernel, serial.
std::vector<double> score_candidates_serial(const CandidateEvaluator& eval, std::span<const Candidate> candidates,
                                            const ObjectiveSpec& obj);
/// Cached kernel, OpenMP over candidates; output independent of thread count.
std::vector<double> score_candidates_parallel(const CandidateEvaluator& eval, std::span<const Candidate> candidates,
                                              const ObjectiveSpec& obj);

/// Lowest score, ties resolved toward the lowest index.
std::size_t argmin_stable(std::span<const double> scores);

}  // namespace navsec
