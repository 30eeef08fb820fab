#pragma once

// Policy-gradient fine-tuning of a pretrained tagger over explored label
// sequences scored by a reward function.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "weakoie/core.hpp"
#include "weakoie/corpus_io.hpp"
#include "weakoie/parameters.hpp"
#include "weakoie/pattern_labeler.hpp"
#include "weakoie/reward.hpp"
#include "weakoie/tagger.hpp"

namespace weakoie {

enum class BaselineMode : std::uint8_t { kOff, kMean };
enum class ExplorationMode : std::uint8_t { kBeam, kSample };

std::string_view baseline_mode_name(BaselineMode mode);
BaselineMode parse_baseline_mode(std::string_view name);
std::string_view exploration_mode_name(ExplorationMode mode);
ExplorationMode parse_exploration_mode(std::string_view name);

// kBeam: the top-`beam_size` constrained decodes. kSample: `beam_size`
// ancestral samples under the same constraints (needs `rng`).
std::vector<TagSequence> explore(const TokenDistributions& distributions, int predicate,
                                 int beam_size, ExplorationMode mode = ExplorationMode::kBeam,
                                 std::mt19937_64* rng = nullptr);
std::vector<TagSequence> explore(const TaggerModel& model, const ParsedSentence& sentence,
                                 int predicate, int beam_size,
                                 ExplorationMode mode = ExplorationMode::kBeam,
                                 std::mt19937_64* rng = nullptr);

// d(loss)/d(logits) for the loss -sum_k (R_k - b) log P(Y_k).
Eigen::MatrixXd reinforce_dlogits(const TokenDistributions& distributions,
                                  std::span<const TagSequence> candidates,
                                  std::span<const double> rewards, BaselineMode baseline);

// Adds scale * d(loss)/d(theta) of the same loss to `grads`.
void accumulate_reinforce_gradient(const TaggerModel& model, const ForwardPass& pass,
                                   std::span<const TagSequence> candidates,
                                   std::span<const double> rewards, BaselineMode baseline,
                                   double scale, ParameterSet& grads);

// One single-instance update. Throws NonFiniteGradient.
void reinforce_step(TaggerModel& model, Optimizer& optimizer, const ParsedSentence& sentence,
                    int predicate, std::span<const TagSequence> candidates,
                    std::span<const double> rewards, BaselineMode baseline);

inline constexpr int kMaxEnumerationLength = 6;

// Every sequence the decoder constraints allow, in lexicographic label-id
// order. Throws std::invalid_argument for m > 6.
std::vector<TagSequence> enumerate_valid_sequences(const LabelSet& labels, int m, int predicate);

using SequenceReward = std::function<double(const TagSequence&)>;

// sum over valid Y of P(Y) R(Y), where P(Y) is the product of per-token probabilities.
double expected_reward_oracle(const TaggerModel& model, const ParsedSentence& sentence,
                              int predicate, const SequenceReward& reward);
double expected_reward_oracle(const TokenDistributions& distributions, int predicate,
                              const SequenceReward& reward);

// d E[R] / d theta computed with the score-function identity over every valid sequence.
ParameterSet exact_policy_gradient(const TaggerModel& model, const ParsedSentence& sentence,
                                   int predicate, const SequenceReward& reward);

struct RlConfig {
  int epochs = 10;
  int beam_size = 3;
  BaselineMode baseline = BaselineMode::kMean;
  ExplorationMode exploration = ExplorationMode::kBeam;
  int batch_size = 16;  // instances per parameter update
  OptimizerConfig optimizer{.learning_rate = 3e-4};
  std::uint64_t seed = 1;
};

struct RlDevSet {
  std::span<const ParsedSentence> sentences;
  std::span<const GoldTuple> gold;  // optional; enables dev F1
};

struct RlEpochMetrics {
  int epoch = 0;
  double mean_reward = 0.0;  // over every explored candidate
  double mean_syn = 0.0;
  double mean_sem = 0.0;
  std::optional<double> dev_reward;  // mean top-1 reward
  std::optional<double> dev_f1;
};

struct RlResult {
  std::vector<RlEpochMetrics> metrics;
  bool looked_untrained = false;
};

// Top-1 extraction per predicate with its average-log confidence.
std::vector<Extraction> extract_corpus(const TaggerModel& model,
                                       std::span<const ParsedSentence> sentences,
                                       const PatternTable& table);

RlResult train_rl(TaggerModel& model, std::span<const ParsedSentence> corpus,
                  const RewardFunction& reward, const RlConfig& config,
                  const std::optional<RlDevSet>& dev = std::nullopt,
                  std::ostream* metrics_log = nullptr);

}  // namespace weakoie
