#include "weakoie/corpus_io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

namespace weakoie {

using nlohmann::json;

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.push_back(line.substr(start, pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

bool parse_int(const std::string& s, int& out) {
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end;
}

std::string chomp(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IOError("cannot open " + path.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IOError("cannot write " + path.string());
  return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw IOError("write failed for " + path.string());
}

json span_json(const Span& s) { return json::array({s.begin, s.end}); }

Span span_from_json(const json& j) {
  if (!j.is_array() || j.size() != 2) throw ParseError("span must be [begin, end]");
  return {j.at(0).get<int>(), j.at(1).get<int>()};
}

}  // namespace

// ---------------------------------------------------------------------------
// CoNLL-U

std::vector<ParsedSentence> read_conllu(std::istream& in) {
  std::vector<ParsedSentence> out;
  std::vector<Token> tokens;
  std::string sent_id;
  std::string text;
  std::size_t block_start = 0;
  bool in_block = false;
  std::size_t lineno = 0;

  auto flush = [&] {
    in_block = false;
    if (tokens.empty()) {
      sent_id.clear();
      text.clear();
      return;
    }
    const std::string id = sent_id.empty() ? "s" + std::to_string(out.size() + 1) : sent_id;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      if (tokens[i].index != static_cast<int>(i + 1)) {
        throw ParseError("token ids are not contiguous from 1", block_start);
      }
    }
    ParsedSentence s = make_sentence(id, std::move(tokens));
    if (!text.empty()) s.text = text;
    try {
      validate_tree(s);
    } catch (const NonTreeParse& e) {
      throw NonTreeParse(e.what(), block_start);
    } catch (const ParseError& e) {
      throw ParseError(e.what(), block_start);
    }
    out.push_back(std::move(s));
    tokens.clear();
    sent_id.clear();
    text.clear();
  };

  std::string line;
  while (std::getline(in, line)) {
    ++lineno;
    line = chomp(line);
    if (line.find_first_not_of(" \t") == std::string::npos) {
      flush();
      continue;
    }
    if (!in_block) {
      in_block = true;
      block_start = lineno;
    }
    if (line[0] == '#') {
      if (line.rfind("# sent_id = ", 0) == 0) sent_id = line.substr(12);
      if (line.rfind("# text = ", 0) == 0) text = line.substr(9);
      continue;
    }
    const auto cols = split(line, '\t');
    if (cols.size() != 10) {
      throw ParseError("expected 10 tab-separated columns, got " + std::to_string(cols.size()),
                       lineno);
    }
    if (cols[0].find_first_of("-.") != std::string::npos) continue;  // multiword / empty node
    Token t;
    if (!parse_int(cols[0], t.index)) throw ParseError("bad ID '" + cols[0] + "'", lineno);
    if (!parse_int(cols[6], t.head)) throw ParseError("bad HEAD '" + cols[6] + "'", lineno);
    t.surface = cols[1];
    t.upos = cols[3];
    t.deprel = cols[7];
    if (t.head == t.index) throw NonTreeParse("token is its own head", lineno);
    tokens.push_back(std::move(t));
  }
  flush();
  return out;
}

std::vector<ParsedSentence> read_conllu(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_conllu(in);
}

void write_conllu(std::span<const ParsedSentence> sentences, std::ostream& out) {
  for (const auto& s : sentences) {
    out << "# sent_id = " << s.sentence_id << '\n' << "# text = " << s.text << '\n';
    for (const auto& t : s.tokens) {
      out << t.index << '\t' << t.surface << "\t_\t" << t.upos << "\t_\t_\t" << t.head << '\t'
          << t.deprel << "\t_\t_\n";
    }
    out << '\n';
  }
}

void write_conllu(std::span<const ParsedSentence> sentences, const std::filesystem::path& path) {
  auto out = open_out(path);
  write_conllu(sentences, out);
  finish(out, path);
}

// ---------------------------------------------------------------------------
// Gold tuples

namespace {

std::vector<GoldTuple> read_gold_impl(std::istream& in,
                                      const std::unordered_map<std::string, int>* lengths,
                                      std::vector<std::string>* warnings) {
  std::vector<GoldTuple> out;
  std::map<std::pair<std::string, int>, std::size_t> index;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = chomp(line);
    if (line.empty() || line[0] == '#') continue;
    const auto cols = split(line, '\t');
    if (cols.size() != 4 && cols.size() != 5) {
      throw ParseError("expected 4 or 5 tab-separated columns", lineno);
    }
    int pred = 0;
    int head = 0;
    if (!parse_int(cols[1], pred) || pred < 1) {
      throw ParseError("bad predicate head '" + cols[1] + "'", lineno);
    }
    if (!parse_int(cols[3], head) || head < 1) {
      throw ParseError("bad role head '" + cols[3] + "'", lineno);
    }
    const auto role = parse_role(cols[2]);
    if (!role) throw ParseError("unknown role '" + cols[2] + "'", lineno);
    if (*role == Role::kP && head != pred) {
      throw ParseError("P row must repeat the predicate head", lineno);
    }
    if (lengths != nullptr) {
      auto it = lengths->find(cols[0]);
      if (it == lengths->end()) {
        if (warnings != nullptr) {
          warnings->push_back("line " + std::to_string(lineno) + ": unknown sentence id '" +
                              cols[0] + "', row skipped");
        }
        continue;
      }
      if (pred > it->second || head > it->second) {
        throw ParseError("head index out of sentence bounds", lineno);
      }
    }
    const auto key = std::make_pair(cols[0], pred);
    auto [it, inserted] = index.try_emplace(key, out.size());
    if (inserted) {
      GoldTuple g;
      g.sentence_id = cols[0];
      g.predicate_head = pred;
      out.push_back(std::move(g));
    }
    GoldTuple& g = out[it->second];
    if (*role != Role::kP) {
      if (!g.role_heads.emplace(*role, head).second) {
        throw ParseError("duplicate " + cols[2] + " row", lineno);
      }
    }
    if (cols.size() == 5 && !cols[4].empty()) g.surfaces[*role] = cols[4];
  }
  return out;
}

}  // namespace

std::vector<GoldTuple> read_gold(std::istream& in) { return read_gold_impl(in, nullptr, nullptr); }

std::vector<GoldTuple> read_gold(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_gold(in);
}

std::vector<GoldTuple> read_gold(const std::filesystem::path& path,
                                 std::span<const ParsedSentence> sentences,
                                 std::vector<std::string>* warnings) {
  std::unordered_map<std::string, int> lengths;
  for (const auto& s : sentences) lengths[s.sentence_id] = s.size();
  auto in = open_in(path);
  return read_gold_impl(in, &lengths, warnings);
}

void write_gold(std::span<const GoldTuple> gold, std::ostream& out) {
  for (const auto& g : gold) {
    auto row = [&](Role role, int head) {
      out << g.sentence_id << '\t' << g.predicate_head << '\t' << role_name(role) << '\t' << head;
      if (auto it = g.surfaces.find(role); it != g.surfaces.end()) out << '\t' << it->second;
      out << '\n';
    };
    if (g.role_heads.empty() || g.surfaces.count(Role::kP)) row(Role::kP, g.predicate_head);
    for (const auto& [role, head] : g.role_heads) row(role, head);
  }
}

void write_gold(std::span<const GoldTuple> gold, const std::filesystem::path& path) {
  auto out = open_out(path);
  write_gold(gold, out);
  finish(out, path);
}

// ---------------------------------------------------------------------------
// Extraction records

void write_extractions(std::span<const Extraction> extractions, std::ostream& out) {
  for (const auto& e : extractions) {
    json j;
    j["sentence_id"] = e.sentence_id;
    j["predicate"] = span_json(e.predicate_span);
    json args = json::object();
    for (const auto& [role, span] : e.role_spans) args[std::string(role_name(role))] = span_json(span);
    j["arguments"] = std::move(args);
    j["confidence"] = e.confidence;
    if (e.reward) {
      j["reward"] = {{"syn", e.reward->syn}, {"sem", e.reward->sem}, {"total", e.reward->total}};
    }
    out << j.dump() << '\n';
  }
}

void write_extractions(std::span<const Extraction> extractions,
                       const std::filesystem::path& path) {
  auto out = open_out(path);
  write_extractions(extractions, out);
  finish(out, path);
}

std::vector<Extraction> read_extractions(std::istream& in) {
  std::vector<Extraction> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (chomp(line).empty()) continue;
    try {
      const json j = json::parse(line);
      Extraction e;
      e.sentence_id = j.at("sentence_id").get<std::string>();
      e.predicate_span = span_from_json(j.at("predicate"));
      for (const auto& [name, span] : j.at("arguments").items()) {
        const auto role = parse_role(name);
        if (!role || *role == Role::kP) throw ParseError("unknown argument role '" + name + "'");
        e.role_spans.emplace(*role, span_from_json(span));
      }
      e.confidence = j.at("confidence").get<double>();
      if (j.contains("reward")) {
        const json& r = j.at("reward");
        e.reward = RewardBreakdown{r.at("syn").get<int>(), r.at("sem").get<double>(),
                                   r.at("total").get<double>()};
      }
      out.push_back(std::move(e));
    } catch (const json::exception& ex) {
      throw ParseError(ex.what(), lineno);
    } catch (const ParseError& ex) {
      throw ParseError(ex.what(), lineno);
    }
  }
  return out;
}

std::vector<Extraction> read_extractions(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_extractions(in);
}

// ---------------------------------------------------------------------------
// Labelled instances

void write_instances(std::span<const TaggedInstance> instances, std::ostream& out) {
  for (const auto& inst : instances) {
    json tokens = json::array();
    for (const auto& t : inst.sentence.tokens) {
      tokens.push_back(json::array({t.surface, t.upos, t.head, t.deprel}));
    }
    json j;
    j["sentence_id"] = inst.sentence.sentence_id;
    j["text"] = inst.sentence.text;
    j["tokens"] = std::move(tokens);
    j["predicate"] = inst.predicate_index;
    j["tags"] = inst.tags.names();
    out << j.dump() << '\n';
  }
}

void write_instances(std::span<const TaggedInstance> instances,
                     const std::filesystem::path& path) {
  auto out = open_out(path);
  write_instances(instances, out);
  finish(out, path);
}

std::vector<TaggedInstance> read_instances(std::istream& in) {
  std::vector<TaggedInstance> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (chomp(line).empty()) continue;
    try {
      const json j = json::parse(line);
      std::vector<Token> tokens;
      for (const auto& t : j.at("tokens")) {
        Token tok;
        tok.surface = t.at(0).get<std::string>();
        tok.upos = t.at(1).get<std::string>();
        tok.head = t.at(2).get<int>();
        tok.deprel = t.at(3).get<std::string>();
        tokens.push_back(std::move(tok));
      }
      TaggedInstance inst;
      inst.sentence = make_sentence(j.at("sentence_id").get<std::string>(), std::move(tokens));
      if (j.contains("text")) inst.sentence.text = j.at("text").get<std::string>();
      validate_tree(inst.sentence);
      inst.predicate_index = j.at("predicate").get<int>();
      inst.tags = TagSequence::parse(j.at("tags").get<std::vector<std::string>>());
      if (static_cast<int>(inst.tags.size()) != inst.sentence.size()) {
        throw ParseError("tag count does not match token count");
      }
      if (inst.predicate_index < 1 || inst.predicate_index > inst.sentence.size()) {
        throw ParseError("predicate index out of range");
      }
      out.push_back(std::move(inst));
    } catch (const json::exception& ex) {
      throw ParseError(ex.what(), lineno);
    } catch (const NonTreeParse& ex) {
      throw NonTreeParse(ex.what(), lineno);
    } catch (const ParseError& ex) {
      throw ParseError(ex.what(), lineno);
    }
  }
  return out;
}

std::vector<TaggedInstance> read_instances(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_instances(in);
}

// ---------------------------------------------------------------------------
// Synthetic corpora

std::string_view template_name(TemplateKind kind) {
  switch (kind) {
    case TemplateKind::kSvo:
      return "svo";
    case TemplateKind::kSvoPp:
      return "svo+pp";
    case TemplateKind::kSvoo:
      return "svoo";
    case TemplateKind::kCoordinatedVp:
      return "coordinated-vp";
  }
  return "?";
}

bool is_in_pattern(TemplateKind kind) { return kind != TemplateKind::kCoordinatedVp; }

TemplateSet TemplateSet::mixed(double out_of_pattern_fraction) {
  const double in = 1.0 - out_of_pattern_fraction;
  return {{{TemplateKind::kSvo, in * 0.6},
           {TemplateKind::kSvoPp, in * 0.4},
           {TemplateKind::kCoordinatedVp, out_of_pattern_fraction}}};
}

TemplateSet TemplateSet::only(TemplateKind kind) { return {{{kind, 1.0}}}; }

namespace {

constexpr std::string_view kNames[] = {"Parragon", "Acme",   "Globex",  "Initech", "Hooli",
                                       "Vandelay", "Tyrell", "Oscorp",  "Wonka",   "Soylent",
                                       "Cyberdyne", "Aperture", "Umbrella", "Stark", "Wayne"};
constexpr std::string_view kSubjectNouns[] = {"company", "firm", "group", "startup", "retailer",
                                              "bank", "studio", "agency"};
constexpr std::string_view kVerbs[] = {"operates", "has",    "owns",     "builds",  "sells",
                                       "acquires", "runs",   "manages",  "opens",   "hires",
                                       "buys",     "closes", "supplies", "designs", "funds"};
constexpr std::string_view kDitransitive[] = {"sends", "gives", "offers", "lends", "ships"};
constexpr std::string_view kObjects[] = {"markets",  "offices",  "stores",       "factories",
                                         "brands",   "products", "employees",    "branches",
                                         "plants",   "websites", "subsidiaries", "warehouses"};
constexpr std::string_view kAdjectives[] = {"new", "large", "small", "regional", "modern", "local"};
constexpr std::string_view kNumbers[] = {"10", "35", "200", "12", "3", "48", "7", "90"};
constexpr std::string_view kPreps[] = {"in", "across", "near", "throughout"};
constexpr std::string_view kPlaces[] = {"Europe", "Asia", "London", "Texas", "Brazil", "Ohio"};

class SentenceBuilder {
 public:
  explicit SentenceBuilder(std::mt19937_64& rng, bool ud_style) : rng_(rng), ud_(ud_style) {}

  template <std::size_t N>
  std::string_view pick(const std::string_view (&pool)[N]) {
    return pool[std::uniform_int_distribution<std::size_t>(0, N - 1)(rng_)];
  }
  bool coin(double p) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng_) < p; }

  int add(std::string_view surface, std::string_view upos, int head, std::string_view deprel) {
    Token t;
    t.index = static_cast<int>(tokens_.size() + 1);
    t.surface = surface;
    t.upos = upos;
    t.head = head;
    t.deprel = deprel;
    tokens_.push_back(std::move(t));
    return tokens_.back().index;
  }
  void attach(int token, int head, std::string_view deprel) {
    tokens_[static_cast<std::size_t>(token - 1)].head = head;
    tokens_[static_cast<std::size_t>(token - 1)].deprel = deprel;
  }
  int next() const { return static_cast<int>(tokens_.size() + 1); }

  // Proper name or "the <noun>"; dependents attach to the returned head.
  int noun_phrase_subject() {
    if (coin(0.7)) return add(pick(kNames), "PROPN", 0, "_");
    const int det = add("the", "DET", 0, "det");
    const int noun = add(pick(kSubjectNouns), "NOUN", 0, "_");
    attach(det, noun, "det");
    return noun;
  }

  // [more than] [NUM] [ADJ] NOUN
  int noun_phrase_object() {
    const bool more_than = coin(0.25);
    const bool number = more_than || coin(0.5);
    const bool adjective = coin(0.4);
    const int head = next() + (more_than ? 2 : 0) + (number ? 1 : 0) + (adjective ? 1 : 0);
    if (more_than) {
      const int more = add("more", "ADJ", head - (adjective ? 2 : 1), "advmod");
      add("than", "ADP", more, "fixed");
    }
    if (number) add(pick(kNumbers), "NUM", head, "nummod");
    if (adjective) add(pick(kAdjectives), "ADJ", head, "amod");
    return add(pick(kObjects), "NOUN", 0, "_");
  }

  std::string_view obj() const { return ud_ ? "obj" : "dobj"; }
  std::string_view obl() const { return ud_ ? "obl" : "nmod"; }

  std::string span_text(int head) const {
    std::vector<int> members = {head};
    for (std::size_t i = 0; i < members.size(); ++i) {
      for (const auto& t : tokens_) {
        if (t.head == members[i]) members.push_back(t.index);
      }
    }
    const auto [lo, hi] = std::minmax_element(members.begin(), members.end());
    std::string out;
    for (int i = *lo; i <= *hi; ++i) {
      if (!out.empty()) out += ' ';
      out += tokens_[static_cast<std::size_t>(i - 1)].surface;
    }
    return out;
  }

  std::vector<Token> take() { return std::move(tokens_); }
  const std::vector<Token>& tokens() const { return tokens_; }

 private:
  std::mt19937_64& rng_;
  bool ud_;
  std::vector<Token> tokens_;
};

}  // namespace

SyntheticCorpus gen_synthetic(const TemplateSet& templates, std::size_t n, std::uint64_t seed) {
  SyntheticCorpus corpus;
  if (n == 0) return corpus;
  if (templates.weights.empty()) throw std::invalid_argument("empty template set");
  std::mt19937_64 rng(seed);
  std::vector<double> w;
  for (const auto& [kind, weight] : templates.weights) w.push_back(weight);
  std::discrete_distribution<std::size_t> choose(w.begin(), w.end());

  for (std::size_t i = 0; i < n; ++i) {
    const TemplateKind kind = templates.weights[choose(rng)].first;
    const bool ud = std::uniform_int_distribution<int>(0, 1)(rng) == 1;
    SentenceBuilder b(rng, ud);
    const std::string id = "syn-" + std::to_string(seed) + "-" + std::to_string(i + 1);
    std::vector<GoldTuple> gold;
    auto tuple = [&](int pred, std::map<Role, int> heads) {
      GoldTuple g;
      g.sentence_id = id;
      g.predicate_head = pred;
      g.role_heads = std::move(heads);
      return g;
    };

    const int subj = b.noun_phrase_subject();
    if (kind == TemplateKind::kSvoo) {
      const int verb = b.add(b.pick(kDitransitive), "VERB", 0, "root");
      const int iobj = b.noun_phrase_subject();
      const int obj = b.noun_phrase_object();
      b.attach(subj, verb, "nsubj");
      b.attach(iobj, verb, "iobj");
      b.attach(obj, verb, b.obj());
      b.add(".", "PUNCT", verb, "punct");
      gold.push_back(tuple(verb, {{Role::kArg1, subj}, {Role::kArg2, obj}, {Role::kArg3, iobj}}));
    } else {
      const int verb = b.add(b.pick(kVerbs), "VERB", 0, "root");
      const int obj = b.noun_phrase_object();
      b.attach(subj, verb, "nsubj");
      b.attach(obj, verb, b.obj());
      gold.push_back(tuple(verb, {{Role::kArg1, subj}, {Role::kArg2, obj}}));
      if (kind == TemplateKind::kSvoPp) {
        const int prep = b.add(b.pick(kPreps), "ADP", 0, "case");
        const int place = b.add(b.pick(kPlaces), "PROPN", verb, b.obl());
        b.attach(prep, place, "case");
      } else if (kind == TemplateKind::kCoordinatedVp) {
        const int cc = b.add("and", "CCONJ", 0, "cc");
        std::string_view second = b.pick(kVerbs);
        while (second == b.tokens()[static_cast<std::size_t>(verb - 1)].surface) {
          second = b.pick(kVerbs);
        }
        const int verb2 = b.add(second, "VERB", verb, "conj");
        const int obj2 = b.noun_phrase_object();
        b.attach(cc, verb2, "cc");
        b.attach(obj2, verb2, b.obj());
        gold.push_back(tuple(verb2, {{Role::kArg1, subj}, {Role::kArg2, obj2}}));
      }
      b.add(".", "PUNCT", verb, "punct");
    }
    for (auto& g : gold) {
      g.surfaces[Role::kP] = b.tokens()[static_cast<std::size_t>(g.predicate_head - 1)].surface;
      for (const auto& [role, head] : g.role_heads) g.surfaces[role] = b.span_text(head);
    }
    corpus.sentences.push_back(make_sentence(id, b.take()));
    corpus.kinds.push_back(kind);
    for (auto& g : gold) corpus.gold.push_back(std::move(g));
  }
  return corpus;
}

std::pair<SyntheticCorpus, SyntheticCorpus> split_corpus(const SyntheticCorpus& corpus,
                                                         std::size_t held_out) {
  held_out = std::min(held_out, corpus.sentences.size());
  const std::size_t cut = corpus.sentences.size() - held_out;
  SyntheticCorpus first;
  SyntheticCorpus second;
  std::set<std::string> tail_ids;
  for (std::size_t i = 0; i < corpus.sentences.size(); ++i) {
    SyntheticCorpus& dst = i < cut ? first : second;
    dst.sentences.push_back(corpus.sentences[i]);
    dst.kinds.push_back(corpus.kinds[i]);
    if (i >= cut) tail_ids.insert(corpus.sentences[i].sentence_id);
  }
  for (const auto& g : corpus.gold) {
    (tail_ids.count(g.sentence_id) ? second : first).gold.push_back(g);
  }
  return {std::move(first), std::move(second)};
}

SyntheticCorpus filter_corpus(const SyntheticCorpus& corpus, bool in_pattern) {
  SyntheticCorpus out;
  std::set<std::string> keep;
  for (std::size_t i = 0; i < corpus.sentences.size(); ++i) {
    if (is_in_pattern(corpus.kinds[i]) != in_pattern) continue;
    out.sentences.push_back(corpus.sentences[i]);
    out.kinds.push_back(corpus.kinds[i]);
    keep.insert(corpus.sentences[i].sentence_id);
  }
  for (const auto& g : corpus.gold) {
    if (keep.count(g.sentence_id)) out.gold.push_back(g);
  }
  return out;
}

}  // namespace weakoie
