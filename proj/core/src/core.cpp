#include "weakoie/core.hpp"

#include <algorithm>
#include <cstdlib>
#include <stdexcept>

namespace weakoie {

std::string_view role_name(Role role) {
  switch (role) {
    case Role::kP:
      return "P";
    case Role::kArg1:
      return "ARG1";
    case Role::kArg2:
      return "ARG2";
    case Role::kArg3:
      return "ARG3";
  }
  return "?";
}

std::optional<Role> parse_role(std::string_view name) {
  for (Role r : kAllRoles) {
    if (role_name(r) == name) return r;
  }
  return std::nullopt;
}

std::string Label::str() const {
  switch (bio) {
    case Bio::kO:
      return "O";
    case Bio::kBegin:
      return "B-" + std::string(role_name(role));
    case Bio::kInside:
      return "I-" + std::string(role_name(role));
  }
  return "O";
}

Label Label::parse(std::string_view text) {
  if (text == "O") return outside();
  if (text.size() > 2 && text[1] == '-' && (text[0] == 'B' || text[0] == 'I')) {
    if (auto role = parse_role(text.substr(2))) {
      return text[0] == 'B' ? begin(*role) : inside(*role);
    }
  }
  throw ParseError("unknown label '" + std::string(text) + "'");
}

LabelSet LabelSet::full() {
  std::vector<Label> labels = {Label::outside()};
  for (Role r : kAllRoles) {
    labels.push_back(Label::begin(r));
    labels.push_back(Label::inside(r));
  }
  return LabelSet(std::move(labels));
}

LabelSet::LabelSet(std::vector<Label> labels) : labels_(std::move(labels)) {
  if (labels_.empty()) throw std::invalid_argument("empty label set");
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i].is_outside()) labels_[i].role = Role::kP;
    for (std::size_t j = 0; j < i; ++j) {
      if (labels_[i] == labels_[j]) {
        throw std::invalid_argument("duplicate label " + labels_[i].str());
      }
    }
  }
}

std::optional<std::size_t> LabelSet::id_of(const Label& label) const {
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] == label) return i;
  }
  return std::nullopt;
}

std::size_t LabelSet::require_id(const Label& label) const {
  if (auto id = id_of(label)) return *id;
  throw std::out_of_range("label " + label.str() + " not in label set");
}

std::vector<std::string> LabelSet::names() const {
  std::vector<std::string> out;
  out.reserve(labels_.size());
  for (const auto& l : labels_) out.push_back(l.str());
  return out;
}

LabelSet LabelSet::from_names(const std::vector<std::string>& names) {
  std::vector<Label> labels;
  labels.reserve(names.size());
  for (const auto& n : names) labels.push_back(Label::parse(n));
  return LabelSet(std::move(labels));
}

std::vector<int> ParsedSentence::children(int index) const {
  std::vector<int> out;
  for (const auto& t : tokens) {
    if (t.head == index && t.index != index) out.push_back(t.index);
  }
  return out;
}

std::vector<std::string> ParsedSentence::surfaces() const {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(t.surface);
  return out;
}

ParsedSentence make_sentence(std::string sentence_id, std::vector<Token> tokens) {
  ParsedSentence s;
  s.sentence_id = std::move(sentence_id);
  s.tokens = std::move(tokens);
  for (std::size_t i = 0; i < s.tokens.size(); ++i) {
    s.tokens[i].index = static_cast<int>(i + 1);
    if (i > 0) s.text += ' ';
    s.text += s.tokens[i].surface;
  }
  return s;
}

void validate_tree(const ParsedSentence& sentence) {
  const int m = sentence.size();
  if (m == 0) throw ParseError("sentence '" + sentence.sentence_id + "' has no tokens");
  int roots = 0;
  for (int i = 1; i <= m; ++i) {
    const Token& t = sentence.token(i);
    if (t.index != i) {
      throw ParseError("sentence '" + sentence.sentence_id + "': token indices not contiguous");
    }
    if (t.head < 0 || t.head > m) {
      throw ParseError("sentence '" + sentence.sentence_id + "': head " +
                       std::to_string(t.head) + " out of range at token " + std::to_string(i));
    }
    if (t.head == i) {
      throw NonTreeParse("sentence '" + sentence.sentence_id + "': token " + std::to_string(i) +
                         " is its own head");
    }
    if (t.head == 0) ++roots;
  }
  if (roots != 1) {
    throw NonTreeParse("sentence '" + sentence.sentence_id + "': expected one root, found " +
                       std::to_string(roots));
  }
  // Every token must reach the root within m steps.
  for (int i = 1; i <= m; ++i) {
    int cur = i;
    int steps = 0;
    while (cur != 0) {
      cur = sentence.token(cur).head;
      if (++steps > m) {
        throw NonTreeParse("sentence '" + sentence.sentence_id + "': cycle through token " +
                           std::to_string(i));
      }
    }
  }
}

const Span* Extraction::role_span(Role role) const {
  auto it = role_spans.find(role);
  return it == role_spans.end() ? nullptr : &it->second;
}

TagSequence TagSequence::parse(const std::vector<std::string>& names) {
  TagSequence t;
  t.labels.reserve(names.size());
  for (const auto& n : names) t.labels.push_back(Label::parse(n));
  return t;
}

std::vector<std::string> TagSequence::names() const {
  std::vector<std::string> out;
  out.reserve(labels.size());
  for (const auto& l : labels) out.push_back(l.str());
  return out;
}

std::vector<std::string> validate_bio(const TagSequence& tags) {
  std::vector<std::string> violations;
  int predicate_spans = 0;
  for (std::size_t i = 0; i < tags.labels.size(); ++i) {
    const Label& cur = tags.labels[i];
    const std::string pos = "position " + std::to_string(i + 1);
    if (cur.bio == Bio::kInside) {
      const bool continues = i > 0 && !tags.labels[i - 1].is_outside() &&
                             tags.labels[i - 1].role == cur.role;
      if (!continues) {
        violations.push_back(pos + ": " + cur.str() + " without B-" +
                             std::string(role_name(cur.role)));
      }
    }
    if (cur.is_predicate()) {
      const bool starts_span =
          cur.bio == Bio::kBegin || i == 0 || !tags.labels[i - 1].is_predicate();
      if (starts_span && ++predicate_spans == 2) {
        violations.push_back(pos + ": two P spans");
      }
    }
  }
  return violations;
}

std::vector<std::string> validate_extraction(const Extraction& e, int m) {
  std::vector<std::string> problems;
  std::vector<std::pair<std::string, Span>> spans = {{"P", e.predicate_span}};
  for (const auto& [role, span] : e.role_spans) {
    if (role == Role::kP) {
      problems.push_back("predicate role listed among argument spans");
      continue;
    }
    spans.emplace_back(std::string(role_name(role)), span);
  }
  for (std::size_t i = 0; i < spans.size(); ++i) {
    const auto& [name, s] = spans[i];
    if (s.begin > s.end) problems.push_back(name + " span is inverted");
    if (s.begin < 1 || s.end > m) problems.push_back(name + " span out of bounds");
    for (std::size_t j = 0; j < i; ++j) {
      if (s.overlaps(spans[j].second)) {
        problems.push_back(name + " span overlaps " + spans[j].first + " span");
      }
    }
  }
  return problems;
}

namespace {

struct Run {
  Role role;
  Span span;
};

std::vector<Run> collect_runs(const TagSequence& tags) {
  std::vector<Run> runs;
  for (std::size_t i = 0; i < tags.labels.size(); ++i) {
    const Label& l = tags.labels[i];
    const int pos = static_cast<int>(i + 1);
    if (l.is_outside()) continue;
    const bool extends = l.bio == Bio::kInside && !runs.empty() && runs.back().role == l.role &&
                         runs.back().span.end == pos - 1;
    if (extends) {
      runs.back().span.end = pos;
    } else {
      runs.push_back({l.role, {pos, pos}});
    }
  }
  return runs;
}

int distance_to(const Span& run, const Span& predicate) {
  if (run.begin < predicate.begin) return predicate.begin - run.begin;
  return run.begin - predicate.end;
}

}  // namespace

Extraction spans_from_tags(const TaggedInstance& instance) {
  return spans_from_tags(instance.tags, instance.predicate_index, instance.sentence.sentence_id);
}

Extraction spans_from_tags(const TagSequence& tags, int predicate_index,
                           const std::string& sentence_id) {
  const std::vector<Run> runs = collect_runs(tags);
  const Run* predicate = nullptr;
  for (const auto& r : runs) {
    if (r.role != Role::kP) continue;
    if (predicate == nullptr) {
      predicate = &r;
    } else if (r.span.contains(predicate_index) ||
               (!predicate->span.contains(predicate_index) &&
                std::abs(r.span.begin - predicate_index) <
                    std::abs(predicate->span.begin - predicate_index))) {
      predicate = &r;
    }
  }
  if (predicate == nullptr) throw NoPredicateSpan();

  Extraction e;
  e.sentence_id = sentence_id;
  e.predicate_span = predicate->span;
  for (const auto& r : runs) {
    if (r.role == Role::kP) continue;
    auto it = e.role_spans.find(r.role);
    if (it == e.role_spans.end()) {
      e.role_spans.emplace(r.role, r.span);
    } else if (distance_to(r.span, e.predicate_span) < distance_to(it->second, e.predicate_span)) {
      it->second = r.span;
    }
  }
  return e;
}

TagSequence tags_from_spans(const Extraction& extraction, int m) {
  if (auto problems = validate_extraction(extraction, m); !problems.empty()) {
    throw SpanOutOfBounds(problems.front());
  }
  TagSequence tags;
  tags.labels.assign(static_cast<std::size_t>(m), Label::outside());
  auto paint = [&](Role role, const Span& s) {
    tags.labels[static_cast<std::size_t>(s.begin - 1)] = Label::begin(role);
    for (int i = s.begin + 1; i <= s.end; ++i) {
      tags.labels[static_cast<std::size_t>(i - 1)] = Label::inside(role);
    }
  };
  paint(Role::kP, extraction.predicate_span);
  for (const auto& [role, span] : extraction.role_spans) paint(role, span);
  return tags;
}

}  // namespace weakoie
