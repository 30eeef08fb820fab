#include "weakoie/evaluator.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <map>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

#include <nlohmann/json.hpp>

namespace weakoie {

using json = nlohmann::json;

namespace {

std::vector<std::string> split_spaces(const std::string& text) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const auto b = text.find_first_not_of(' ', pos);
    if (b == std::string::npos) break;
    const auto e = text.find(' ', b);
    out.push_back(text.substr(b, e == std::string::npos ? std::string::npos : e - b));
    pos = e == std::string::npos ? text.size() : e;
  }
  return out;
}

bool lexical_match(const Span& span, const std::string& gold_surface,
                   const ParsedSentence& sentence, double threshold) {
  const auto gold_tokens = split_spaces(gold_surface);
  if (gold_tokens.empty()) return false;
  std::unordered_map<std::string, int> pred;
  for (int i = span.begin; i <= span.end && i <= sentence.size(); ++i) {
    ++pred[sentence.token(i).surface];
  }
  int overlap = 0;
  for (const auto& w : gold_tokens) {
    auto it = pred.find(w);
    if (it != pred.end() && it->second > 0) {
      --it->second;
      ++overlap;
    }
  }
  return static_cast<double>(overlap) / static_cast<double>(gold_tokens.size()) >= threshold;
}

bool role_ok(Role role, const Span& span, int head, const GoldTuple& gold,
             const ParsedSentence* sentence, const MatchOptions& options) {
  if (span.contains(head)) return true;
  if (!options.lexical_overlap || sentence == nullptr) return false;
  auto it = gold.surfaces.find(role);
  if (it == gold.surfaces.end()) return false;
  return lexical_match(span, it->second, *sentence, *options.lexical_overlap);
}

std::unordered_map<std::string, const ParsedSentence*> index_sentences(
    std::span<const ParsedSentence> sentences) {
  std::unordered_map<std::string, const ParsedSentence*> out;
  for (const auto& s : sentences) out.emplace(s.sentence_id, &s);
  return out;
}

}  // namespace

bool match(const Extraction& pred, const GoldTuple& gold) {
  return match(pred, gold, nullptr, {});
}

bool match(const Extraction& pred, const GoldTuple& gold, const ParsedSentence* sentence,
           const MatchOptions& options) {
  if (pred.sentence_id != gold.sentence_id) return false;
  if (!role_ok(Role::kP, pred.predicate_span, gold.predicate_head, gold, sentence, options)) {
    return false;
  }
  for (const auto& [role, head] : gold.role_heads) {
    const Span* span = pred.role_span(role);
    if (span == nullptr || !role_ok(role, *span, head, gold, sentence, options)) return false;
  }
  return true;
}

std::vector<PrPoint> pr_curve(std::span<const Extraction> extractions,
                              std::span<const GoldTuple> gold,
                              std::vector<MatchDecision>* decisions,
                              std::span<const ParsedSentence> sentences,
                              const MatchOptions& options) {
  if (gold.empty()) throw EmptyGold();
  const auto by_id = index_sentences(sentences);
  std::unordered_map<std::string, std::vector<std::size_t>> gold_by_sentence;
  for (std::size_t g = 0; g < gold.size(); ++g) gold_by_sentence[gold[g].sentence_id].push_back(g);

  std::vector<std::size_t> order(extractions.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return extractions[a].confidence > extractions[b].confidence;
  });

  std::vector<bool> used(gold.size(), false);
  std::vector<PrPoint> points;
  std::size_t matched = 0;
  for (std::size_t r = 0; r < order.size(); ++r) {
    const Extraction& e = extractions[order[r]];
    MatchDecision d{order[r], e.sentence_id, e.confidence, std::nullopt};
    auto sit = by_id.find(e.sentence_id);
    const ParsedSentence* sentence = sit == by_id.end() ? nullptr : sit->second;
    if (auto git = gold_by_sentence.find(e.sentence_id); git != gold_by_sentence.end()) {
      for (std::size_t g : git->second) {
        if (!used[g] && match(e, gold[g], sentence, options)) {
          used[g] = true;
          d.gold = g;
          ++matched;
          break;
        }
      }
    }
    if (decisions != nullptr) decisions->push_back(d);
    const bool last_at_threshold =
        r + 1 == order.size() || extractions[order[r + 1]].confidence != e.confidence;
    if (last_at_threshold) {
      points.push_back({static_cast<double>(matched) / static_cast<double>(gold.size()),
                        static_cast<double>(matched) / static_cast<double>(r + 1), e.confidence});
    }
  }
  return points;
}

double auc(std::span<const PrPoint> points) {
  if (points.empty()) return 0.0;
  double area = points.front().recall * points.front().precision;
  for (std::size_t i = 1; i < points.size(); ++i) {
    area += (points[i].recall - points[i - 1].recall) *
            (points[i].precision + points[i - 1].precision) / 2.0;
  }
  return area;
}

double best_f1(std::span<const PrPoint> points) {
  double best = 0.0;
  for (const auto& p : points) {
    if (p.precision + p.recall > 0.0) {
      best = std::max(best, 2.0 * p.precision * p.recall / (p.precision + p.recall));
    }
  }
  return best;
}

EvalReport evaluate(std::span<const Extraction> extractions, std::span<const GoldTuple> gold,
                    std::span<const ParsedSentence> sentences, const MatchOptions& options) {
  EvalReport report;
  report.pr_points = pr_curve(extractions, gold, &report.decisions, sentences, options);
  report.auc = auc(report.pr_points);
  report.best_f1 = best_f1(report.pr_points);
  report.num_gold = gold.size();
  report.num_predicted = extractions.size();
  report.num_matched = static_cast<std::size_t>(std::count_if(
      report.decisions.begin(), report.decisions.end(), [](const auto& d) { return d.gold.has_value(); }));
  return report;
}

std::string_view rerank_mode_name(RerankMode mode) {
  switch (mode) {
    case RerankMode::kNone:
      return "none";
    case RerankMode::kSem:
      return "sem";
    case RerankMode::kCombined:
      return "combined";
  }
  return "none";
}

RerankMode parse_rerank_mode(std::string_view name) {
  for (RerankMode m : {RerankMode::kNone, RerankMode::kSem, RerankMode::kCombined}) {
    if (rerank_mode_name(m) == name) return m;
  }
  throw std::invalid_argument("unknown rerank mode '" + std::string(name) + "'");
}

std::vector<Extraction> rerank(std::span<const Extraction> extractions,
                               std::span<const ParsedSentence> sentences,
                               const SemanticScorer& scorer, RerankMode mode) {
  std::vector<Extraction> out(extractions.begin(), extractions.end());
  if (mode == RerankMode::kNone) return out;
  const auto by_id = index_sentences(sentences);
  for (auto& e : out) {
    auto it = by_id.find(e.sentence_id);
    if (it == by_id.end()) {
      throw std::invalid_argument("no sentence with id '" + e.sentence_id + "' for reranking");
    }
    const double sem = scorer.score(e, *it->second);
    e.confidence = semantic_confidence(mode == RerankMode::kSem ? 0.0 : e.confidence, sem);
  }
  return out;
}

void write_report(const EvalReport& report, const std::filesystem::path& path) {
  json points = json::array();
  for (const auto& p : report.pr_points) {
    points.push_back({{"recall", p.recall}, {"precision", p.precision}, {"threshold", p.threshold}});
  }
  json decisions = json::array();
  for (const auto& d : report.decisions) {
    decisions.push_back({{"extraction", d.extraction},
                         {"sentence_id", d.sentence_id},
                         {"confidence", d.confidence},
                         {"matched", d.gold.has_value()},
                         {"gold", d.gold ? json(*d.gold) : json(nullptr)}});
  }
  const json j{{"auc", report.auc},
               {"best_f1", report.best_f1},
               {"num_gold", report.num_gold},
               {"num_predicted", report.num_predicted},
               {"num_matched", report.num_matched},
               {"pr_points", points},
               {"decisions", decisions}};
  std::ofstream out(path);
  if (!out) throw IOError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

void write_pr_data(const EvalReport& report, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IOError("cannot write " + path.string());
  out << "# recall precision\n" << std::setprecision(17);
  for (const auto& p : report.pr_points) out << p.recall << ' ' << p.precision << '\n';
}

}  // namespace weakoie
