#pragma once

// Maximum-likelihood pretraining on (noisy) labelled instances.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "weakoie/core.hpp"
#include "weakoie/parameters.hpp"
#include "weakoie/tagger.hpp"

namespace weakoie {

inline constexpr double kProbabilityFloor = 1e-12;

// -sum_i log p(y_i). Probabilities below 1e-12 are clamped; `clamped` (if
// given) receives how many were.
double mle_loss(const TokenDistributions& distributions, const TagSequence& tags,
                std::size_t* clamped = nullptr);
double mle_loss(const TaggerModel& model, const TaggedInstance& instance);

// Adds scale * d(mle_loss)/d(theta) to `grads` and returns the loss.
double accumulate_mle_gradient(const TaggerModel& model, const TaggedInstance& instance,
                               double scale, ParameterSet& grads);

struct MleConfig {
  int epochs = 5;
  int batch_size = 16;
  // Stop after this many epochs without a dev-loss improvement; 0 disables.
  int patience = 3;
  OptimizerConfig optimizer;
  std::uint64_t seed = 1;
};

struct MleEpochMetrics {
  int epoch = 0;
  double train_loss = 0.0;  // mean over instances of the per-token mean loss
  std::optional<double> dev_loss;
  std::optional<double> dev_f1;
};

struct PretrainResult {
  std::vector<MleEpochMetrics> metrics;
  int best_epoch = 0;
};

// Span-level micro F1 of top-1 decodes against the instances' own spans.
double instance_span_f1(const TaggerModel& model, std::span<const TaggedInstance> instances);

// Minibatch minimization of the mean per-token loss. With a dev set, the
// parameters of the best dev-loss epoch are restored at the end. Each epoch's
// metrics are written to `metrics_log` as one JSON line. Throws NonFiniteLoss.
PretrainResult pretrain(TaggerModel& model, std::span<const TaggedInstance> train,
                        std::span<const TaggedInstance> dev, const MleConfig& config,
                        std::ostream* metrics_log = nullptr);

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t checked = 0;
};

// Compares `analytic` (d f / d theta at the model's parameters) with central
// differences of `f` on up to `samples` coordinates per parameter array,
// chosen with `seed`. Relative error is |a - n| / max(|a|, |n|, 1e-6).
GradCheckResult check_gradient(const TaggerModel& model, const ParameterSet& analytic,
                               const std::function<double(const TaggerModel&)>& f,
                               double epsilon, std::size_t samples, std::uint64_t seed);

// check_gradient applied to mle_loss.
GradCheckResult grad_check(const TaggerModel& model, const TaggedInstance& instance,
                           double epsilon, std::size_t samples = 16, std::uint64_t seed = 1);

}  // namespace weakoie
