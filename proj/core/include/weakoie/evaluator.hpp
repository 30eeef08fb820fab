#pragma once

// Headword-match scoring, precision-recall sweeps, AUC and best F1.

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "weakoie/core.hpp"
#include "weakoie/corpus_io.hpp"
#include "weakoie/reward.hpp"

namespace weakoie {

struct MatchOptions {
  // When set, a role also matches if the predicted span covers at least this
  // fraction of the gold surface tokens. Needs sentences and gold surfaces.
  std::optional<double> lexical_overlap;
};

// Predicate span holds the gold predicate head and every gold role head lies
// in the predicted span of the same role. Extra predicted roles are ignored.
bool match(const Extraction& pred, const GoldTuple& gold);
bool match(const Extraction& pred, const GoldTuple& gold, const ParsedSentence* sentence,
           const MatchOptions& options);

struct PrPoint {
  double recall = 0.0;
  double precision = 0.0;
  double threshold = 0.0;
};

struct MatchDecision {
  std::size_t extraction = 0;  // index into the input extractions
  std::string sentence_id;
  double confidence = 0.0;
  std::optional<std::size_t> gold;  // index into the gold list when matched
};

struct EvalReport {
  std::vector<PrPoint> pr_points;  // descending threshold, so recall is non-decreasing
  double auc = 0.0;
  double best_f1 = 0.0;
  std::vector<MatchDecision> decisions;  // in ranking order
  std::size_t num_gold = 0;
  std::size_t num_predicted = 0;
  std::size_t num_matched = 0;
};

// Greedy one-to-one assignment in descending confidence (input order breaks
// ties), then one point per distinct confidence. Throws EmptyGold.
std::vector<PrPoint> pr_curve(std::span<const Extraction> extractions,
                              std::span<const GoldTuple> gold,
                              std::vector<MatchDecision>* decisions = nullptr,
                              std::span<const ParsedSentence> sentences = {},
                              const MatchOptions& options = {});

// Rectangle from recall 0 to the first point at its precision, then trapezoids.
double auc(std::span<const PrPoint> points);
double best_f1(std::span<const PrPoint> points);

EvalReport evaluate(std::span<const Extraction> extractions, std::span<const GoldTuple> gold,
                    std::span<const ParsedSentence> sentences = {},
                    const MatchOptions& options = {});

enum class RerankMode { kNone, kSem, kCombined };

std::string_view rerank_mode_name(RerankMode mode);
RerankMode parse_rerank_mode(std::string_view name);

// kNone keeps c, kSem uses log(sem), kCombined uses c + log(sem). Throws
// std::invalid_argument when an extraction's sentence is missing.
std::vector<Extraction> rerank(std::span<const Extraction> extractions,
                               std::span<const ParsedSentence> sentences,
                               const SemanticScorer& scorer, RerankMode mode);

// Structured JSON report and a two-column "recall precision" plot file.
void write_report(const EvalReport& report, const std::filesystem::path& path);
void write_pr_data(const EvalReport& report, const std::filesystem::path& path);

}  // namespace weakoie
