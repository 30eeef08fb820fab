#pragma once

// Predicate-conditioned BIO tagger: word + predicate-indicator embeddings, a
// stacked bidirectional LSTM encoder with highway gates between layers, a
// softmax classifier per token, and constrained k-best decoding.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "weakoie/core.hpp"
#include "weakoie/parameters.hpp"
#include "weakoie/pattern_labeler.hpp"

namespace weakoie {

enum class EmbedderKind : std::uint8_t { kStaticLookup, kExternalContextual };

std::string_view embedder_kind_name(EmbedderKind kind);

struct TaggerConfig {
  int embedding_dim = 32;
  int indicator_dim = 8;
  int hidden_dim = 64;  // per direction
  int num_encoder_layers = 2;
  LabelSet label_set = LabelSet::full();
  int beam_size = 3;
  std::uint64_t rng_seed = 1;
  EmbedderKind embedder_kind = EmbedderKind::kStaticLookup;
  // Ablation switch: when false the indicator channel is all zeros.
  bool use_predicate_indicator = true;

  // Throws std::invalid_argument.
  void validate() const;
  friend bool operator==(const TaggerConfig&, const TaggerConfig&) = default;
};

// Supplies fixed-width word vectors for a whole sentence, e.g. from a
// pretrained contextual encoder. Must be deterministic and thread-safe.
class ContextualEmbedder {
 public:
  virtual ~ContextualEmbedder() = default;
  virtual int dim() const = 0;
  virtual std::vector<Eigen::VectorXd> embed(const std::vector<std::string>& tokens,
                                             int predicate) const = 0;
};

// Deterministic stand-in provider: hashed character trigrams mixed with the
// neighbouring tokens. Useful for exercising the external-embedding path.
class HashingContextualEmbedder : public ContextualEmbedder {
 public:
  explicit HashingContextualEmbedder(int dim) : dim_(dim) {}
  int dim() const override { return dim_; }
  std::vector<Eigen::VectorXd> embed(const std::vector<std::string>& tokens,
                                     int predicate) const override;

 private:
  int dim_;
};

class Vocabulary {
 public:
  static constexpr std::string_view kUnknown = "<unk>";

  Vocabulary();
  // Words in first-appearance order; words seen fewer than `min_count` times map to <unk>.
  static Vocabulary build(std::span<const ParsedSentence> sentences, int min_count = 1);
  static Vocabulary from_words(const std::vector<std::string>& words);

  int size() const { return static_cast<int>(words_.size()); }
  // 0 for unknown words.
  int id(const std::string& word) const;
  const std::vector<std::string>& words() const { return words_; }
  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.words_ == b.words_; }

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, int> index_;
};

// Per-token label probabilities (rows = tokens, columns = label ids).
struct TokenDistributions {
  LabelSet labels = LabelSet::full();
  Eigen::MatrixXd probs;

  int length() const { return static_cast<int>(probs.rows()); }
  double prob(int position, const Label& label) const;  // 1-based position
};

class TaggerModel;

// Everything the backward pass needs from one forward evaluation.
struct ForwardPass {
  struct Direction {
    std::vector<Eigen::VectorXd> inputs;  // [x_t; h_{t-1}] in processing order
    std::vector<Eigen::VectorXd> gates;   // i, f, g, o (activated) stacked
    std::vector<Eigen::VectorXd> cells;
    std::vector<Eigen::VectorXd> hidden;
  };
  struct Layer {
    std::vector<Eigen::VectorXd> input;   // per position
    Direction forward;
    Direction backward;
    std::vector<Eigen::VectorXd> lstm_out;  // [h_fwd; h_bwd] per position
    std::vector<Eigen::VectorXd> gate;      // highway gate, empty for the first layer
    std::vector<Eigen::VectorXd> output;
  };
  std::vector<int> word_ids;
  int predicate = 0;
  std::vector<Layer> layers;
  Eigen::MatrixXd logits;  // m x |L|
  TokenDistributions distributions;
};

class TaggerModel {
 public:
  // Parameters drawn uniformly from [-0.1, 0.1] with the configured seed.
  static TaggerModel init(const TaggerConfig& config, Vocabulary vocab,
                          std::shared_ptr<const ContextualEmbedder> contextual = nullptr);

  const TaggerConfig& config() const { return config_; }
  const Vocabulary& vocab() const { return vocab_; }
  const ParameterSet& params() const { return params_; }
  ParameterSet& mutable_params() { return params_; }
  const std::shared_ptr<const ContextualEmbedder>& contextual_embedder() const {
    return contextual_;
  }
  void set_contextual_embedder(std::shared_ptr<const ContextualEmbedder> contextual);

  // x_i = [word vector; indicator embedding of (i == predicate)].
  std::vector<Eigen::VectorXd> embed(const ParsedSentence& sentence, int predicate) const;
  std::vector<Eigen::VectorXd> encode(const std::vector<Eigen::VectorXd>& embeddings) const;
  Eigen::VectorXd label_distribution(const Eigen::VectorXd& hidden) const;
  TokenDistributions distributions(const ParsedSentence& sentence, int predicate) const;

  ForwardPass forward(const ParsedSentence& sentence, int predicate) const;
  // Accumulates d(objective)/d(theta) into `grads` given d(objective)/d(logits).
  void backward(const ForwardPass& pass, const Eigen::MatrixXd& dlogits,
                ParameterSet& grads) const;

  // Binary container: magic, JSON header (config, vocabulary, parameter
  // manifest) and raw IEEE-754 doubles. Round trips bit-exactly.
  void save(const std::filesystem::path& path) const;
  static TaggerModel load(const std::filesystem::path& path,
                          std::shared_ptr<const ContextualEmbedder> contextual = nullptr);

 private:
  TaggerModel(TaggerConfig config, Vocabulary vocab, ParameterSet params,
              std::shared_ptr<const ContextualEmbedder> contextual);
  std::vector<Eigen::VectorXd> encode_layers(std::vector<Eigen::VectorXd> embeddings,
                                             std::vector<ForwardPass::Layer>& layers) const;
  ForwardPass run(const ParsedSentence& sentence, int predicate, bool keep) const;

  TaggerConfig config_;
  Vocabulary vocab_;
  ParameterSet params_;
  std::shared_ptr<const ContextualEmbedder> contextual_;
};

// softmax(W h + b) for an explicit classifier; exposed for tests.
Eigen::VectorXd label_distribution(const Eigen::VectorXd& hidden, const Eigen::MatrixXd& weights,
                                   const Eigen::VectorXd& bias);

// Whether `next` may follow `prev` (nullopt at the sentence start) at 1-based
// `position`: I-X continues X, B-P sits on the predicate, I-P continues P.
bool transition_allowed(const std::optional<Label>& prev, const Label& next, int position,
                        int predicate);

// Exact k-best under the structural constraints, best first; ties are broken
// by lexicographic order of label ids.
std::vector<TagSequence> beam_decode(const TokenDistributions& distributions, int beam_size,
                                     int predicate);

// Mean natural-log probability of the chosen labels.
double confidence_avg_log(const TagSequence& tags, const TokenDistributions& distributions);

struct ExtractOptions {
  // Replaces the average-log confidence when set (semantic reranking).
  std::function<double(const Extraction&, const ParsedSentence&)> rescore;
};

// One extraction per predicate whose top decode contains a P span.
std::vector<Extraction> extract(const ParsedSentence& sentence, const TaggerModel& model,
                                const PatternTable& table, const ExtractOptions& options = {});

}  // namespace weakoie
