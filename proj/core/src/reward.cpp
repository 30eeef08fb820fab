#include "weakoie/reward.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <mutex>
#include <stdexcept>
#include <unordered_map>

#include <httplib.h>
#include <nlohmann/json.hpp>

namespace weakoie {

using json = nlohmann::json;

namespace {

bool span_has_any(const Span& span, const std::vector<int>& indices) {
  return std::any_of(indices.begin(), indices.end(), [&](int i) { return span.contains(i); });
}

std::vector<std::string> split_spaces(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    if (ch == ' ') {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

}  // namespace

int syn_score(const Extraction& extraction, const ParsedSentence& sentence,
              const PatternTable& table) {
  const Span& p = extraction.predicate_span;
  if (p.begin < 1 || p.end > sentence.size() || p.begin > p.end) return -1;
  for (int v = p.begin; v <= p.end; ++v) {
    if (!table.is_predicate_token(sentence.token(v))) continue;
    bool ok = true;
    for (const auto& [role, span] : extraction.role_spans) {
      if (!span_has_any(span, derived_headwords(sentence, v, role, table))) {
        ok = false;
        break;
      }
    }
    if (ok) return 1;
  }
  return -1;
}

std::string verbalize(const Extraction& extraction, const ParsedSentence& sentence) {
  std::string out;
  auto append = [&](const Span& span) {
    for (int i = span.begin; i <= span.end; ++i) {
      if (!out.empty()) out += ' ';
      out += sentence.token(i).surface;
    }
  };
  if (const Span* a1 = extraction.role_span(Role::kArg1)) append(*a1);
  append(extraction.predicate_span);
  if (const Span* a2 = extraction.role_span(Role::kArg2)) append(*a2);
  if (const Span* a3 = extraction.role_span(Role::kArg3)) append(*a3);
  return out;
}

double sem_score_surrogate(const Extraction& extraction, const ParsedSentence& sentence) {
  const std::vector<std::string> hyp = split_spaces(verbalize(extraction, sentence));
  if (hyp.empty()) return 0.0;
  std::unordered_map<std::string, int> available;
  for (const Token& t : sentence.tokens) ++available[t.surface];
  int found = 0;
  for (const auto& w : hyp) {
    auto it = available.find(w);
    if (it != available.end() && it->second > 0) {
      --it->second;
      ++found;
    }
  }
  const double containment = static_cast<double>(found) / static_cast<double>(hyp.size());
  int filled = 1;  // P
  if (extraction.role_span(Role::kArg1)) ++filled;
  if (extraction.role_span(Role::kArg2)) ++filled;
  return containment * (filled / 3.0);
}

RewardBreakdown combined_reward(int syn, double sem) {
  if (syn != 1 && syn != -1) throw std::invalid_argument("syn must be +1 or -1");
  if (!(sem >= 0.0 && sem <= 1.0)) throw std::invalid_argument("sem must lie in [0, 1]");
  return {syn, sem, syn * sem};
}

double semantic_confidence(double confidence, double sem) {
  return confidence + std::log(std::max(sem, kSemFloor));
}

std::optional<double> EntailmentCache::lookup(const std::string& sentence_id,
                                              const std::string& hypothesis) const {
  std::shared_lock lock(mutex_);
  auto it = entries_.find({sentence_id, hypothesis});
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void EntailmentCache::insert(const std::string& sentence_id, const std::string& hypothesis,
                             double probability) {
  std::unique_lock lock(mutex_);
  entries_[{sentence_id, hypothesis}] = probability;
}

std::size_t EntailmentCache::size() const {
  std::shared_lock lock(mutex_);
  return entries_.size();
}

void EntailmentCache::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) return;
  std::map<std::pair<std::string, std::string>, double> loaded;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      loaded[{j.at("sentence_id").get<std::string>(), j.at("hypothesis").get<std::string>()}] =
          j.at("probability").get<double>();
    } catch (const json::exception& e) {
      throw ParseError(std::string("bad cache record: ") + e.what(), lineno);
    }
  }
  std::unique_lock lock(mutex_);
  for (auto& [k, v] : loaded) entries_[k] = v;
}

void EntailmentCache::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw IOError("cannot write " + path.string());
  std::shared_lock lock(mutex_);
  for (const auto& [key, p] : entries_) {
    out << json{{"sentence_id", key.first}, {"hypothesis", key.second}, {"probability", p}}.dump()
        << '\n';
  }
}

EntailmentSemanticScorer::EntailmentSemanticScorer(std::shared_ptr<const EntailmentScorer> scorer,
                                                   std::shared_ptr<EntailmentCache> cache)
    : scorer_(std::move(scorer)), cache_(std::move(cache)) {
  if (!scorer_) throw std::invalid_argument("entailment scorer is null");
}

double EntailmentSemanticScorer::score(const Extraction& extraction,
                                       const ParsedSentence& sentence) const {
  const std::string hypothesis = verbalize(extraction, sentence);
  if (cache_) {
    if (auto hit = cache_->lookup(sentence.sentence_id, hypothesis)) return *hit;
  }
  const double p = scorer_->score(sentence.text, hypothesis);
  if (!(p >= 0.0 && p <= 1.0)) throw Error("entailment score outside [0, 1]");
  if (cache_) cache_->insert(sentence.sentence_id, hypothesis, p);
  return p;
}

HttpEntailmentScorer::HttpEntailmentScorer(const std::string& url, int timeout_seconds)
    : url_(url), timeout_seconds_(timeout_seconds) {
  const std::string scheme = "http://";
  if (url.rfind(scheme, 0) != 0) throw std::invalid_argument("scorer URL must start with http://");
  const std::string rest = url.substr(scheme.size());
  const auto slash = rest.find('/');
  const std::string authority = rest.substr(0, slash);
  path_ = slash == std::string::npos ? "/" : rest.substr(slash);
  const auto colon = authority.rfind(':');
  if (colon == std::string::npos) {
    host_ = authority;
  } else {
    host_ = authority.substr(0, colon);
    try {
      port_ = std::stoi(authority.substr(colon + 1));
    } catch (const std::exception&) {
      throw std::invalid_argument("bad port in scorer URL: " + url);
    }
  }
  if (host_.empty()) throw std::invalid_argument("missing host in scorer URL: " + url);
}

double HttpEntailmentScorer::score(const std::string& premise,
                                   const std::string& hypothesis) const {
  httplib::Client client(host_, port_);
  client.set_connection_timeout(timeout_seconds_, 0);
  client.set_read_timeout(timeout_seconds_, 0);
  const std::string body = json{{"premise", premise}, {"hypothesis", hypothesis}}.dump();
  auto res = client.Post(path_, body, "application/json");
  if (!res) throw Error("scorer request to " + url_ + " failed: " + httplib::to_string(res.error()));
  if (res->status != 200) {
    throw Error("scorer at " + url_ + " returned HTTP " + std::to_string(res->status));
  }
  double p = 0.0;
  try {
    p = json::parse(res->body).at("probability").get<double>();
  } catch (const json::exception& e) {
    throw Error(std::string("malformed scorer reply: ") + e.what());
  }
  if (!(p >= 0.0 && p <= 1.0)) throw Error("scorer probability outside [0, 1]");
  return p;
}

RewardFunction::RewardFunction(PatternTable table, std::shared_ptr<const SemanticScorer> scorer)
    : table_(std::move(table)), scorer_(std::move(scorer)) {
  if (!scorer_) throw std::invalid_argument("semantic scorer is null");
}

RewardBreakdown RewardFunction::score(const Extraction& extraction,
                                      const ParsedSentence& sentence) const {
  return combined_reward(syn_score(extraction, sentence, table_),
                         scorer_->score(extraction, sentence));
}

RewardBreakdown RewardFunction::score(const ParsedSentence& sentence, int predicate,
                                      const TagSequence& tags) const {
  Extraction e;
  try {
    e = spans_from_tags(tags, predicate, sentence.sentence_id);
  } catch (const NoPredicateSpan&) {
    // The empty hypothesis is trivially entailed, so the total is the floor -1.
    return combined_reward(-1, 1.0);
  }
  return score(e, sentence);
}

}  // namespace weakoie
