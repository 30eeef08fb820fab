#include "weakoie/rl_trainer.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "weakoie/evaluator.hpp"

namespace weakoie {

using Eigen::MatrixXd;
using json = nlohmann::json;

namespace {

double sequence_log_prob(const TokenDistributions& dist, const TagSequence& tags) {
  double lp = 0.0;
  for (std::size_t i = 0; i < tags.size(); ++i) {
    lp += std::log(dist.probs(static_cast<Eigen::Index>(i),
                              static_cast<Eigen::Index>(dist.labels.require_id(tags.labels[i]))));
  }
  return lp;
}

// Adds weight * (onehot(Y) - p) row by row, i.e. weight * d log P(Y) / d logits.
void add_score_function(const TokenDistributions& dist, const TagSequence& tags, double weight,
                        MatrixXd& out) {
  for (std::size_t i = 0; i < tags.size(); ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    out.row(row) -= weight * dist.probs.row(row);
    out(row, static_cast<Eigen::Index>(dist.labels.require_id(tags.labels[i]))) += weight;
  }
}

void enumerate(const std::vector<Label>& labels, int m, int predicate, std::vector<Label>& prefix,
               std::vector<TagSequence>& out) {
  const int pos = static_cast<int>(prefix.size()) + 1;
  if (pos > m) {
    out.push_back(TagSequence{prefix, std::nullopt});
    return;
  }
  for (const Label& l : labels) {
    const std::optional<Label> prev =
        prefix.empty() ? std::nullopt : std::optional<Label>(prefix.back());
    if (!transition_allowed(prev, l, pos, predicate)) continue;
    prefix.push_back(l);
    enumerate(labels, m, predicate, prefix, out);
    prefix.pop_back();
  }
}

struct Item {
  std::size_t sentence;
  int predicate;
};

std::vector<Item> predicate_items(std::span<const ParsedSentence> sentences,
                                  const PatternTable& table) {
  std::vector<Item> items;
  for (std::size_t s = 0; s < sentences.size(); ++s) {
    for (int p : identify_predicates(sentences[s], table)) items.push_back({s, p});
  }
  return items;
}

}  // namespace

std::string_view baseline_mode_name(BaselineMode mode) {
  return mode == BaselineMode::kOff ? "off" : "mean";
}

BaselineMode parse_baseline_mode(std::string_view name) {
  if (name == "off") return BaselineMode::kOff;
  if (name == "mean") return BaselineMode::kMean;
  throw std::invalid_argument("unknown baseline mode '" + std::string(name) + "'");
}

std::string_view exploration_mode_name(ExplorationMode mode) {
  return mode == ExplorationMode::kBeam ? "beam" : "sample";
}

ExplorationMode parse_exploration_mode(std::string_view name) {
  if (name == "beam") return ExplorationMode::kBeam;
  if (name == "sample") return ExplorationMode::kSample;
  throw std::invalid_argument("unknown exploration mode '" + std::string(name) + "'");
}

std::vector<TagSequence> explore(const TokenDistributions& distributions, int predicate,
                                 int beam_size, ExplorationMode mode, std::mt19937_64* rng) {
  if (beam_size < 1) throw std::invalid_argument("beam_size must be >= 1");
  if (mode == ExplorationMode::kBeam) return beam_decode(distributions, beam_size, predicate);
  if (rng == nullptr) throw std::invalid_argument("sampling exploration needs a generator");
  const auto& labels = distributions.labels.labels();
  const int m = distributions.length();
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<TagSequence> out;
  for (int k = 0; k < beam_size; ++k) {
    TagSequence seq;
    double lp = 0.0;
    for (int pos = 1; pos <= m; ++pos) {
      const std::optional<Label> prev =
          seq.labels.empty() ? std::nullopt : std::optional<Label>(seq.labels.back());
      std::vector<double> weights(labels.size(), 0.0);
      double total = 0.0;
      for (std::size_t l = 0; l < labels.size(); ++l) {
        if (transition_allowed(prev, labels[l], pos, predicate)) {
          weights[l] = distributions.probs(pos - 1, static_cast<Eigen::Index>(l));
          total += weights[l];
        }
      }
      double u = unit(*rng) * total;
      std::size_t pick = 0;
      for (std::size_t l = 0; l < labels.size(); ++l) {
        if (weights[l] <= 0.0) continue;
        pick = l;
        if (u < weights[l]) break;
        u -= weights[l];
      }
      seq.labels.push_back(labels[pick]);
      lp += std::log(distributions.probs(pos - 1, static_cast<Eigen::Index>(pick)));
    }
    seq.log_prob = lp;
    out.push_back(std::move(seq));
  }
  return out;
}

std::vector<TagSequence> explore(const TaggerModel& model, const ParsedSentence& sentence,
                                 int predicate, int beam_size, ExplorationMode mode,
                                 std::mt19937_64* rng) {
  return explore(model.distributions(sentence, predicate), predicate, beam_size, mode, rng);
}

MatrixXd reinforce_dlogits(const TokenDistributions& distributions,
                           std::span<const TagSequence> candidates,
                           std::span<const double> rewards, BaselineMode baseline) {
  if (candidates.empty() || candidates.size() != rewards.size()) {
    throw std::invalid_argument("need one reward per candidate and at least one candidate");
  }
  double b = 0.0;
  if (baseline == BaselineMode::kMean) {
    // Running mean: identical rewards give b equal to them exactly.
    for (std::size_t k = 0; k < rewards.size(); ++k) {
      b += (rewards[k] - b) / static_cast<double>(k + 1);
    }
  }
  MatrixXd d = MatrixXd::Zero(distributions.probs.rows(), distributions.probs.cols());
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    const double w = rewards[k] - b;
    if (w != 0.0) add_score_function(distributions, candidates[k], -w, d);
  }
  return d;
}

void accumulate_reinforce_gradient(const TaggerModel& model, const ForwardPass& pass,
                                   std::span<const TagSequence> candidates,
                                   std::span<const double> rewards, BaselineMode baseline,
                                   double scale, ParameterSet& grads) {
  MatrixXd d = reinforce_dlogits(pass.distributions, candidates, rewards, baseline);
  if (d.isZero(0.0)) return;
  d *= scale;
  model.backward(pass, d, grads);
}

void reinforce_step(TaggerModel& model, Optimizer& optimizer, const ParsedSentence& sentence,
                    int predicate, std::span<const TagSequence> candidates,
                    std::span<const double> rewards, BaselineMode baseline) {
  const ForwardPass pass = model.forward(sentence, predicate);
  ParameterSet grads = model.params().zeros_like();
  accumulate_reinforce_gradient(model, pass, candidates, rewards, baseline, 1.0, grads);
  if (!grads.all_finite()) {
    throw NonFiniteGradient("non-finite policy gradient on sentence " + sentence.sentence_id);
  }
  optimizer.step(model.mutable_params(), grads);
}

std::vector<TagSequence> enumerate_valid_sequences(const LabelSet& labels, int m, int predicate) {
  if (m < 0 || m > kMaxEnumerationLength) {
    throw std::invalid_argument("enumeration is limited to sentences of at most 6 tokens");
  }
  std::vector<TagSequence> out;
  std::vector<Label> prefix;
  enumerate(labels.labels(), m, predicate, prefix, out);
  return out;
}

double expected_reward_oracle(const TokenDistributions& distributions, int predicate,
                              const SequenceReward& reward) {
  double total = 0.0;
  for (const auto& y :
       enumerate_valid_sequences(distributions.labels, distributions.length(), predicate)) {
    const double r = reward(y);
    if (r != 0.0) total += std::exp(sequence_log_prob(distributions, y)) * r;
  }
  return total;
}

double expected_reward_oracle(const TaggerModel& model, const ParsedSentence& sentence,
                              int predicate, const SequenceReward& reward) {
  return expected_reward_oracle(model.distributions(sentence, predicate), predicate, reward);
}

ParameterSet exact_policy_gradient(const TaggerModel& model, const ParsedSentence& sentence,
                                   int predicate, const SequenceReward& reward) {
  const ForwardPass pass = model.forward(sentence, predicate);
  const auto& dist = pass.distributions;
  MatrixXd d = MatrixXd::Zero(dist.probs.rows(), dist.probs.cols());
  for (const auto& y : enumerate_valid_sequences(dist.labels, dist.length(), predicate)) {
    const double r = reward(y);
    if (r != 0.0) add_score_function(dist, y, std::exp(sequence_log_prob(dist, y)) * r, d);
  }
  ParameterSet grads = model.params().zeros_like();
  model.backward(pass, d, grads);
  return grads;
}

std::vector<Extraction> extract_corpus(const TaggerModel& model,
                                       std::span<const ParsedSentence> sentences,
                                       const PatternTable& table) {
  std::vector<Extraction> out;
  for (const auto& s : sentences) {
    auto e = extract(s, model, table);
    out.insert(out.end(), std::make_move_iterator(e.begin()), std::make_move_iterator(e.end()));
  }
  return out;
}

RlResult train_rl(TaggerModel& model, std::span<const ParsedSentence> corpus,
                  const RewardFunction& reward, const RlConfig& config,
                  const std::optional<RlDevSet>& dev, std::ostream* metrics_log) {
  if (config.epochs < 0 || config.batch_size < 1 || config.beam_size < 1) {
    throw std::invalid_argument("epochs must be >= 0, batch_size and beam_size >= 1");
  }
  RlResult result;
  const TaggerModel fresh =
      TaggerModel::init(model.config(), model.vocab(), model.contextual_embedder());
  if (fresh.params() == model.params()) {
    result.looked_untrained = true;
    std::clog << "warning: policy-gradient training started from freshly initialized parameters\n";
  }

  const PatternTable& table = reward.table();
  std::vector<Item> items = predicate_items(corpus, table);
  std::vector<Item> dev_items;
  if (dev) dev_items = predicate_items(dev->sentences, table);

  std::mt19937_64 rng(config.seed);
  Optimizer optimizer(config.optimizer, model.params());
  ParameterSet grads = model.params().zeros_like();
  std::vector<double> rewards;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(items.begin(), items.end(), rng);
    double sum_reward = 0.0;
    double sum_syn = 0.0;
    double sum_sem = 0.0;
    std::size_t n_candidates = 0;
    for (std::size_t start = 0; start < items.size(); start += config.batch_size) {
      const std::size_t stop = std::min(items.size(), start + config.batch_size);
      const double scale = 1.0 / static_cast<double>(stop - start);
      grads.set_zero();
      for (std::size_t k = start; k < stop; ++k) {
        const ParsedSentence& sentence = corpus[items[k].sentence];
        const int p = items[k].predicate;
        const ForwardPass pass = model.forward(sentence, p);
        const auto candidates =
            explore(pass.distributions, p, config.beam_size, config.exploration, &rng);
        rewards.clear();
        for (const auto& c : candidates) {
          const RewardBreakdown r = reward.score(sentence, p, c);
          rewards.push_back(r.total);
          sum_reward += r.total;
          sum_syn += r.syn;
          sum_sem += r.sem;
          ++n_candidates;
        }
        accumulate_reinforce_gradient(model, pass, candidates, rewards, config.baseline, scale,
                                      grads);
      }
      if (!grads.all_finite()) {
        throw NonFiniteGradient("non-finite policy gradient in epoch " + std::to_string(epoch));
      }
      optimizer.step(model.mutable_params(), grads);
    }
    if (!model.params().all_finite()) {
      throw NumericError("non-finite parameters after epoch " + std::to_string(epoch));
    }

    RlEpochMetrics metrics;
    metrics.epoch = epoch;
    if (n_candidates > 0) {
      const auto n = static_cast<double>(n_candidates);
      metrics.mean_reward = sum_reward / n;
      metrics.mean_syn = sum_syn / n;
      metrics.mean_sem = sum_sem / n;
    }
    if (dev) {
      double total = 0.0;
      for (const auto& item : dev_items) {
        const ParsedSentence& s = dev->sentences[item.sentence];
        const auto top = beam_decode(model.distributions(s, item.predicate), 1, item.predicate);
        total += reward.score(s, item.predicate, top.front()).total;
      }
      metrics.dev_reward = dev_items.empty() ? 0.0 : total / static_cast<double>(dev_items.size());
      if (!dev->gold.empty()) {
        const auto extractions = extract_corpus(model, dev->sentences, table);
        metrics.dev_f1 = evaluate(extractions, dev->gold).best_f1;
      }
    }
    result.metrics.push_back(metrics);
    if (metrics_log != nullptr) {
      json j{{"epoch", epoch},
             {"mean_reward", metrics.mean_reward},
             {"mean_syn", metrics.mean_syn},
             {"mean_sem", metrics.mean_sem}};
      j["dev_reward"] = metrics.dev_reward ? json(*metrics.dev_reward) : json(nullptr);
      j["dev_f1"] = metrics.dev_f1 ? json(*metrics.dev_f1) : json(nullptr);
      *metrics_log << j.dump() << '\n';
    }
  }
  return result;
}

}  // namespace weakoie
