#include "weakoie/mle_trainer.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>
#include <random>
#include <set>
#include <tuple>

#include <nlohmann/json.hpp>

namespace weakoie {

using Eigen::MatrixXd;
using json = nlohmann::json;

namespace {

std::vector<std::size_t> label_ids(const TokenDistributions& dist, const TagSequence& tags) {
  std::vector<std::size_t> ids;
  ids.reserve(tags.size());
  for (const auto& l : tags.labels) ids.push_back(dist.labels.require_id(l));
  return ids;
}

double mean_loss(const TaggerModel& model, std::span<const TaggedInstance> instances) {
  double total = 0.0;
  for (const auto& inst : instances) total += mle_loss(model, inst) / inst.sentence.size();
  return total / static_cast<double>(instances.size());
}

using SpanKey = std::tuple<std::size_t, int, int, int>;  // instance, role, begin, end

void add_spans(std::size_t k, const Extraction& e, std::set<SpanKey>& out) {
  out.emplace(k, static_cast<int>(Role::kP), e.predicate_span.begin, e.predicate_span.end);
  for (const auto& [role, span] : e.role_spans) {
    out.emplace(k, static_cast<int>(role), span.begin, span.end);
  }
}

}  // namespace

double mle_loss(const TokenDistributions& distributions, const TagSequence& tags,
                std::size_t* clamped) {
  if (static_cast<int>(tags.size()) != distributions.length()) {
    throw std::invalid_argument("tag sequence length differs from distributions");
  }
  const auto ids = label_ids(distributions, tags);
  double loss = 0.0;
  std::size_t n_clamped = 0;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    double p = distributions.probs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(ids[i]));
    if (p < kProbabilityFloor) {
      p = kProbabilityFloor;
      ++n_clamped;
    }
    loss -= std::log(p);
  }
  if (clamped != nullptr) *clamped = n_clamped;
  return loss;
}

double mle_loss(const TaggerModel& model, const TaggedInstance& instance) {
  std::size_t clamped = 0;
  const double loss =
      mle_loss(model.distributions(instance.sentence, instance.predicate_index), instance.tags,
               &clamped);
  if (clamped > 0) {
    std::clog << "warning: " << clamped << " gold-label probabilities clamped to "
              << kProbabilityFloor << " in sentence " << instance.sentence.sentence_id << '\n';
  }
  return loss;
}

double accumulate_mle_gradient(const TaggerModel& model, const TaggedInstance& instance,
                               double scale, ParameterSet& grads) {
  const ForwardPass pass = model.forward(instance.sentence, instance.predicate_index);
  const auto& dist = pass.distributions;
  const auto ids = label_ids(dist, instance.tags);
  MatrixXd dlogits = dist.probs;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    dlogits(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(ids[i])) -= 1.0;
  }
  dlogits *= scale;
  model.backward(pass, dlogits, grads);
  return mle_loss(dist, instance.tags);
}

double instance_span_f1(const TaggerModel& model, std::span<const TaggedInstance> instances) {
  std::set<SpanKey> gold;
  std::set<SpanKey> predicted;
  for (std::size_t k = 0; k < instances.size(); ++k) {
    const auto& inst = instances[k];
    add_spans(k, spans_from_tags(inst), gold);
    const auto dist = model.distributions(inst.sentence, inst.predicate_index);
    const auto beams = beam_decode(dist, 1, inst.predicate_index);
    if (beams.empty()) continue;
    try {
      add_spans(k, spans_from_tags(beams.front(), inst.predicate_index, inst.sentence.sentence_id),
                predicted);
    } catch (const NoPredicateSpan&) {
    }
  }
  std::size_t hit = 0;
  for (const auto& s : predicted) hit += gold.count(s);
  if (hit == 0) return 0.0;
  const double p = static_cast<double>(hit) / static_cast<double>(predicted.size());
  const double r = static_cast<double>(hit) / static_cast<double>(gold.size());
  return 2.0 * p * r / (p + r);
}

PretrainResult pretrain(TaggerModel& model, std::span<const TaggedInstance> train,
                        std::span<const TaggedInstance> dev, const MleConfig& config,
                        std::ostream* metrics_log) {
  if (train.empty()) throw std::invalid_argument("training corpus is empty");
  if (config.epochs < 0 || config.batch_size < 1) {
    throw std::invalid_argument("epochs must be >= 0 and batch_size >= 1");
  }
  std::mt19937_64 rng(config.seed);
  Optimizer optimizer(config.optimizer, model.params());
  ParameterSet grads = model.params().zeros_like();
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  PretrainResult result;
  std::optional<double> best_dev;
  ParameterSet best_params = model.params();
  int since_best = 0;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      const double batch = static_cast<double>(stop - start);
      grads.set_zero();
      for (std::size_t k = start; k < stop; ++k) {
        const auto& inst = train[order[k]];
        const double m = inst.sentence.size();
        const double loss = accumulate_mle_gradient(model, inst, 1.0 / (m * batch), grads);
        if (!std::isfinite(loss)) {
          throw NonFiniteLoss("non-finite loss in epoch " + std::to_string(epoch) +
                              " on sentence " + inst.sentence.sentence_id);
        }
        epoch_loss += loss / m;
      }
      if (!grads.all_finite()) {
        throw NonFiniteGradient("non-finite gradient in epoch " + std::to_string(epoch));
      }
      optimizer.step(model.mutable_params(), grads);
    }

    MleEpochMetrics metrics;
    metrics.epoch = epoch;
    metrics.train_loss = epoch_loss / static_cast<double>(train.size());
    if (!dev.empty()) {
      metrics.dev_loss = mean_loss(model, dev);
      metrics.dev_f1 = instance_span_f1(model, dev);
      if (!std::isfinite(*metrics.dev_loss)) throw NonFiniteLoss("non-finite dev loss");
    }
    result.metrics.push_back(metrics);
    if (metrics_log != nullptr) {
      json j{{"epoch", epoch}, {"train_loss", metrics.train_loss}};
      j["dev_loss"] = metrics.dev_loss ? json(*metrics.dev_loss) : json(nullptr);
      j["dev_f1"] = metrics.dev_f1 ? json(*metrics.dev_f1) : json(nullptr);
      *metrics_log << j.dump() << '\n';
    }

    if (!metrics.dev_loss) {
      result.best_epoch = epoch;
      continue;
    }
    if (!best_dev || *metrics.dev_loss < *best_dev) {
      best_dev = metrics.dev_loss;
      best_params = model.params();
      result.best_epoch = epoch;
      since_best = 0;
    } else if (config.patience > 0 && ++since_best >= config.patience) {
      break;
    }
  }
  if (best_dev) model.mutable_params() = best_params;
  return result;
}

GradCheckResult check_gradient(const TaggerModel& model, const ParameterSet& analytic,
                               const std::function<double(const TaggerModel&)>& f,
                               double epsilon, std::size_t samples, std::uint64_t seed) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
  TaggerModel probe = model;
  std::mt19937_64 rng(seed);
  GradCheckResult result;
  for (auto& param : probe.mutable_params().entries()) {
    const Eigen::Index n = param.value.size();
    std::vector<Eigen::Index> coords(static_cast<std::size_t>(n));
    std::iota(coords.begin(), coords.end(), Eigen::Index{0});
    std::shuffle(coords.begin(), coords.end(), rng);
    if (coords.size() > samples) coords.resize(samples);
    const MatrixXd& a = analytic[param.name];
    for (Eigen::Index c : coords) {
      double& x = param.value.data()[c];
      const double saved = x;
      x = saved + epsilon;
      const double up = f(probe);
      x = saved - epsilon;
      const double down = f(probe);
      x = saved;
      const double numeric = (up - down) / (2.0 * epsilon);
      const double exact = a.data()[c];
      const double denom = std::max({std::abs(exact), std::abs(numeric), 1e-6});
      result.max_relative_error = std::max(result.max_relative_error, std::abs(exact - numeric) / denom);
      ++result.checked;
    }
  }
  return result;
}

GradCheckResult grad_check(const TaggerModel& model, const TaggedInstance& instance,
                           double epsilon, std::size_t samples, std::uint64_t seed) {
  ParameterSet grads = model.params().zeros_like();
  accumulate_mle_gradient(model, instance, 1.0, grads);
  return check_gradient(
      model, grads, [&](const TaggerModel& m) { return mle_loss(m, instance); }, epsilon, samples,
      seed);
}

}  // namespace weakoie
