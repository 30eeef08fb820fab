#pragma once

// Shared data model: dependency-parsed sentences, BIO tag sequences,
// extractions, and the conversions between tags and spans.

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "weakoie/errors.hpp"

namespace weakoie {

enum class Role : std::uint8_t { kP, kArg1, kArg2, kArg3 };

inline constexpr std::array<Role, 4> kAllRoles = {Role::kP, Role::kArg1, Role::kArg2,
                                                  Role::kArg3};
inline constexpr std::array<Role, 3> kArgumentRoles = {Role::kArg1, Role::kArg2, Role::kArg3};

std::string_view role_name(Role role);
std::optional<Role> parse_role(std::string_view name);

enum class Bio : std::uint8_t { kO, kBegin, kInside };

// One BIO label. The role is meaningless for O and normalized to kP.
struct Label {
  Bio bio = Bio::kO;
  Role role = Role::kP;

  static constexpr Label outside() { return {}; }
  static constexpr Label begin(Role r) { return {Bio::kBegin, r}; }
  static constexpr Label inside(Role r) { return {Bio::kInside, r}; }

  bool is_outside() const { return bio == Bio::kO; }
  bool is_predicate() const { return bio != Bio::kO && role == Role::kP; }

  std::string str() const;
  // Throws ParseError on unknown spellings.
  static Label parse(std::string_view text);

  friend bool operator==(const Label& a, const Label& b) {
    if (a.bio == Bio::kO || b.bio == Bio::kO) return a.bio == b.bio;
    return a.bio == b.bio && a.role == b.role;
  }
};

// Ordered inventory of labels; the order fixes classifier output ids and the
// lexicographic tie-break used by decoding.
class LabelSet {
 public:
  // O, B-P, I-P, B-ARG1, I-ARG1, B-ARG2, I-ARG2, B-ARG3, I-ARG3.
  static LabelSet full();

  explicit LabelSet(std::vector<Label> labels);

  std::size_t size() const { return labels_.size(); }
  const Label& at(std::size_t id) const { return labels_.at(id); }
  std::optional<std::size_t> id_of(const Label& label) const;
  // Throws std::out_of_range when the label is not part of the set.
  std::size_t require_id(const Label& label) const;
  std::vector<std::string> names() const;
  static LabelSet from_names(const std::vector<std::string>& names);

  const std::vector<Label>& labels() const { return labels_; }
  friend bool operator==(const LabelSet&, const LabelSet&) = default;

 private:
  std::vector<Label> labels_;
};

struct Token {
  int index = 0;  // 1-based
  std::string surface;
  std::string upos;
  int head = 0;  // 0 = root
  std::string deprel;

  friend bool operator==(const Token&, const Token&) = default;
};

struct ParsedSentence {
  std::string sentence_id;
  std::vector<Token> tokens;
  std::string text;

  int size() const { return static_cast<int>(tokens.size()); }
  // 1-based accessor.
  const Token& token(int index) const { return tokens.at(static_cast<std::size_t>(index - 1)); }
  // Children of `index` (0 for the root) in surface order.
  std::vector<int> children(int index) const;
  std::vector<std::string> surfaces() const;

  friend bool operator==(const ParsedSentence&, const ParsedSentence&) = default;
};

// Builds a sentence with indices renumbered 1..m and text space-joined.
ParsedSentence make_sentence(std::string sentence_id, std::vector<Token> tokens);

// Throws ParseError on bad indices and NonTreeParse on self-loops, cycles or
// anything other than a single root.
void validate_tree(const ParsedSentence& sentence);

// Inclusive 1-based token range.
struct Span {
  int begin = 0;
  int end = 0;

  bool contains(int index) const { return begin <= index && index <= end; }
  bool overlaps(const Span& other) const { return begin <= other.end && other.begin <= end; }
  int length() const { return end - begin + 1; }
  friend bool operator==(const Span&, const Span&) = default;
};

struct TagSequence {
  std::vector<Label> labels;
  std::optional<double> log_prob;

  std::size_t size() const { return labels.size(); }
  static TagSequence parse(const std::vector<std::string>& names);
  std::vector<std::string> names() const;
  friend bool operator==(const TagSequence&, const TagSequence&) = default;
};

struct TaggedInstance {
  ParsedSentence sentence;
  int predicate_index = 0;  // 1-based
  TagSequence tags;

  friend bool operator==(const TaggedInstance&, const TaggedInstance&) = default;
};

struct RewardBreakdown {
  int syn = -1;
  double sem = 0.0;
  double total = -0.0;

  friend bool operator==(const RewardBreakdown&, const RewardBreakdown&) = default;
};

struct Extraction {
  std::string sentence_id;
  Span predicate_span;
  std::map<Role, Span> role_spans;  // argument roles only
  double confidence = 0.0;
  std::optional<RewardBreakdown> reward;

  const Span* role_span(Role role) const;
  friend bool operator==(const Extraction&, const Extraction&) = default;
};

// Empty iff every I-X follows B-X/I-X and there is at most one P span.
std::vector<std::string> validate_bio(const TagSequence& tags);

// Empty iff spans are non-empty, inside 1..m and pairwise disjoint.
std::vector<std::string> validate_extraction(const Extraction& extraction, int m);

// Maximal runs become spans. When a role has several runs, the run whose start
// is nearest the predicate span wins (leftmost on ties). Throws NoPredicateSpan.
Extraction spans_from_tags(const TaggedInstance& instance);
Extraction spans_from_tags(const TagSequence& tags, int predicate_index,
                           const std::string& sentence_id);

// Throws SpanOutOfBounds for inverted, out-of-range or overlapping spans.
TagSequence tags_from_spans(const Extraction& extraction, int m);

}  // namespace weakoie
