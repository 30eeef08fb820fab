#pragma once

// Extraction rewards: a syntactic headword constraint, a semantic
// consistency score, their product, and the semantic-augmented confidence.

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <utility>

#include "weakoie/core.hpp"
#include "weakoie/pattern_labeler.hpp"

namespace weakoie {

// +1 when the predicate span holds a predicate token v and every emitted
// argument span contains one of v's parse-derived headwords for its role.
int syn_score(const Extraction& extraction, const ParsedSentence& sentence,
              const PatternTable& table);

// "ARG1 P ARG2 ARG3" over the filled roles, single spaces.
std::string verbalize(const Extraction& extraction, const ParsedSentence& sentence);

// containment x completeness: the multiset fraction of hypothesis tokens found
// in the sentence, times the filled share of {ARG1, P, ARG2}.
double sem_score_surrogate(const Extraction& extraction, const ParsedSentence& sentence);

// Throws std::invalid_argument unless syn is +-1 and sem lies in [0, 1].
RewardBreakdown combined_reward(int syn, double sem);

inline constexpr double kSemFloor = 1e-12;

// c + log(max(sem, 1e-12)).
double semantic_confidence(double confidence, double sem);

// Probability that `premise` entails `hypothesis`, in [0, 1].
class EntailmentScorer {
 public:
  virtual ~EntailmentScorer() = default;
  virtual double score(const std::string& premise, const std::string& hypothesis) const = 0;
};

// Sem for an extraction of a sentence.
class SemanticScorer {
 public:
  virtual ~SemanticScorer() = default;
  virtual double score(const Extraction& extraction, const ParsedSentence& sentence) const = 0;
};

class SurrogateSemanticScorer : public SemanticScorer {
 public:
  double score(const Extraction& extraction, const ParsedSentence& sentence) const override {
    return sem_score_surrogate(extraction, sentence);
  }
};

// Scores keyed by (sentence_id, hypothesis). Lookups take a shared lock,
// inserts an exclusive one.
class EntailmentCache {
 public:
  std::optional<double> lookup(const std::string& sentence_id, const std::string& hypothesis) const;
  void insert(const std::string& sentence_id, const std::string& hypothesis, double probability);
  std::size_t size() const;

  // JSON lines {"sentence_id", "hypothesis", "probability"}. A missing file
  // loads as empty.
  void load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

 private:
  mutable std::shared_mutex mutex_;
  std::map<std::pair<std::string, std::string>, double> entries_;
};

// Premise = sentence text, hypothesis = verbalized tuple.
class EntailmentSemanticScorer : public SemanticScorer {
 public:
  EntailmentSemanticScorer(std::shared_ptr<const EntailmentScorer> scorer,
                           std::shared_ptr<EntailmentCache> cache = nullptr);
  double score(const Extraction& extraction, const ParsedSentence& sentence) const override;

 private:
  std::shared_ptr<const EntailmentScorer> scorer_;
  std::shared_ptr<EntailmentCache> cache_;
};

// POSTs {"premise", "hypothesis"} as JSON to an http:// endpoint and reads
// {"probability"} back. Out-of-range or malformed replies raise Error.
class HttpEntailmentScorer : public EntailmentScorer {
 public:
  explicit HttpEntailmentScorer(const std::string& url, int timeout_seconds = 30);
  double score(const std::string& premise, const std::string& hypothesis) const override;
  const std::string& url() const { return url_; }

 private:
  std::string url_;
  std::string host_;
  int port_ = 80;
  std::string path_;
  int timeout_seconds_;
};

class RewardFunction {
 public:
  RewardFunction(PatternTable table, std::shared_ptr<const SemanticScorer> scorer);

  RewardBreakdown score(const Extraction& extraction, const ParsedSentence& sentence) const;
  // Sequences without a predicate span score {syn -1, sem 1, total -1}.
  RewardBreakdown score(const ParsedSentence& sentence, int predicate,
                        const TagSequence& tags) const;

  const PatternTable& table() const { return table_; }

 private:
  PatternTable table_;
  std::shared_ptr<const SemanticScorer> scorer_;
};

}  // namespace weakoie
