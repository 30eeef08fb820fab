#include "weakoie/pattern_labeler.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace weakoie {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::set<std::string> split_list(const std::string& value) {
  std::set<std::string> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.insert(item);
  }
  return out;
}

std::string join_list(const std::set<std::string>& items) {
  std::string out;
  for (const auto& i : items) {
    if (!out.empty()) out += ", ";
    out += i;
  }
  return out;
}

void collect_subtree(const ParsedSentence& sentence, int root, std::vector<int>& out) {
  out.push_back(root);
  for (int c : sentence.children(root)) collect_subtree(sentence, c, out);
}

}  // namespace

PatternTable PatternTable::defaults() {
  PatternTable t;
  t.predicate_pos = {"VERB"};
  t.role_patterns[Role::kArg1] = {"nsubj", "nsubjpass", "nsubj:pass"};
  t.role_patterns[Role::kArg2] = {"dobj", "obj", "xcomp", "ccomp", "nmod", "obl"};
  t.role_patterns[Role::kArg3] = {"iobj", "dative"};
  t.auxiliary_relations = {"aux", "auxpass", "aux:pass", "cop"};
  t.subject_sharing_relations = {"conj"};
  return t;
}

PatternTable PatternTable::parse(const std::string& text) {
  PatternTable t = defaults();
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("expected 'key = value'", lineno);
    const std::string key = trim(line.substr(0, eq));
    const std::set<std::string> values = split_list(line.substr(eq + 1));
    if (key == "predicate_pos") {
      t.predicate_pos = values;
    } else if (key == "auxiliary_relations") {
      t.auxiliary_relations = values;
    } else if (key == "subject_sharing_relations") {
      t.subject_sharing_relations = values;
    } else if (auto role = parse_role(key); role && *role != Role::kP) {
      if (values.empty()) {
        t.role_patterns.erase(*role);
      } else {
        t.role_patterns[*role] = values;
      }
    } else {
      throw ParseError("unknown pattern table key '" + key + "'", lineno);
    }
  }
  try {
    t.validate();
  } catch (const std::invalid_argument& e) {
    throw ParseError(e.what());
  }
  return t;
}

PatternTable PatternTable::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IOError("cannot open pattern table " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::string PatternTable::serialize() const {
  std::ostringstream out;
  out << "predicate_pos = " << join_list(predicate_pos) << '\n';
  for (const auto& [role, rels] : role_patterns) {
    out << role_name(role) << " = " << join_list(rels) << '\n';
  }
  out << "auxiliary_relations = " << join_list(auxiliary_relations) << '\n';
  out << "subject_sharing_relations = " << join_list(subject_sharing_relations) << '\n';
  return out.str();
}

void PatternTable::validate() const {
  std::set<std::string> seen;
  for (const auto& [role, rels] : role_patterns) {
    if (role == Role::kP) throw std::invalid_argument("P cannot carry argument patterns");
    for (const auto& r : rels) {
      if (!seen.insert(r).second) {
        throw std::invalid_argument("relation '" + r + "' assigned to more than one role");
      }
    }
  }
}

std::optional<Role> PatternTable::role_for(const std::string& deprel) const {
  for (const auto& [role, rels] : role_patterns) {
    if (rels.count(deprel)) return role;
  }
  return std::nullopt;
}

bool PatternTable::is_predicate_token(const Token& token) const {
  return predicate_pos.count(token.upos) > 0 && auxiliary_relations.count(token.deprel) == 0;
}

std::vector<int> identify_predicates(const ParsedSentence& sentence, const PatternTable& table) {
  std::vector<int> out;
  for (const auto& t : sentence.tokens) {
    if (table.is_predicate_token(t)) out.push_back(t.index);
  }
  return out;
}

std::map<Role, int> match_argument_heads(const ParsedSentence& sentence, int predicate,
                                         const PatternTable& table) {
  std::map<Role, int> heads;
  for (int c : sentence.children(predicate)) {
    if (auto role = table.role_for(sentence.token(c).deprel)) {
      heads.try_emplace(*role, c);
    }
  }
  return heads;
}

std::vector<int> derived_headwords(const ParsedSentence& sentence, int predicate, Role role,
                                   const PatternTable& table) {
  std::vector<int> out;
  auto it = table.role_patterns.find(role);
  if (it == table.role_patterns.end()) return out;
  for (int c : sentence.children(predicate)) {
    if (it->second.count(sentence.token(c).deprel)) out.push_back(c);
  }
  if (!out.empty() || role != Role::kArg1) return out;
  // Subject sharing: walk up coordination links until a subject is found.
  int cur = predicate;
  for (int steps = 0; steps < sentence.size(); ++steps) {
    const Token& t = sentence.token(cur);
    if (t.head == 0 || !table.subject_sharing_relations.count(t.deprel)) break;
    const Token& parent = sentence.token(t.head);
    if (!table.predicate_pos.count(parent.upos)) break;
    cur = parent.index;
    for (int c : sentence.children(cur)) {
      if (it->second.count(sentence.token(c).deprel)) out.push_back(c);
    }
    if (!out.empty()) break;
  }
  return out;
}

Span expand_subtree_span(const ParsedSentence& sentence, int head, int predicate,
                         std::span<const int> blocked) {
  if (head == predicate) throw std::invalid_argument("argument head equals predicate");
  std::vector<int> subtree;
  collect_subtree(sentence, head, subtree);
  const auto [lo_it, hi_it] = std::minmax_element(subtree.begin(), subtree.end());
  Span span{*lo_it, *hi_it};
  auto block = [&](int b) {
    if (b < head && b >= span.begin) span.begin = b + 1;
    if (b > head && b <= span.end) span.end = b - 1;
  };
  block(predicate);
  for (int b : blocked) {
    if (b != head) block(b);
  }
  return span;
}

std::vector<TaggedInstance> generate_instances(const ParsedSentence& sentence,
                                               const PatternTable& table) {
  std::vector<TaggedInstance> out;
  const int m = sentence.size();
  for (int p : identify_predicates(sentence, table)) {
    const std::map<Role, int> heads = match_argument_heads(sentence, p, table);
    if (heads.empty()) continue;
    Extraction e;
    e.sentence_id = sentence.sentence_id;
    e.predicate_span = {p, p};
    std::vector<int> taken;
    for (const auto& [role, h] : heads) {
      std::vector<int> blocked = taken;
      for (const auto& [other, oh] : heads) {
        if (other != role) blocked.push_back(oh);
      }
      const Span span = expand_subtree_span(sentence, h, p, blocked);
      for (int i = span.begin; i <= span.end; ++i) taken.push_back(i);
      e.role_spans.emplace(role, span);
    }
    out.push_back({sentence, p, tags_from_spans(e, m)});
  }
  return out;
}

std::vector<TaggedInstance> label_corpus(std::span<const ParsedSentence> sentences,
                                         const PatternTable& table, unsigned threads,
                                         LabelingStats* stats) {
  std::vector<std::vector<TaggedInstance>> per_sentence(sentences.size());
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(sentences.size())));
  {
    std::vector<std::jthread> workers;
    for (unsigned w = 0; w < threads; ++w) {
      workers.emplace_back([&, w] {
        for (std::size_t i = w; i < sentences.size(); i += threads) {
          per_sentence[i] = generate_instances(sentences[i], table);
        }
      });
    }
  }
  std::vector<TaggedInstance> out;
  LabelingStats local;
  local.sentences = sentences.size();
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    local.predicates += identify_predicates(sentences[i], table).size();
    for (auto& inst : per_sentence[i]) {
      const Extraction e = spans_from_tags(inst);
      for (const auto& [role, span] : e.role_spans) ++local.role_counts[role];
      out.push_back(std::move(inst));
    }
  }
  local.instances = out.size();
  if (stats != nullptr) *stats = local;
  return out;
}

}  // namespace weakoie
