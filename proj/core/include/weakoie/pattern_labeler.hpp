#pragma once

// Dependency-pattern labelling functions: turn parsed sentences into noisy
// BIO training instances.

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "weakoie/core.hpp"

namespace weakoie {

struct PatternTable {
  std::map<Role, std::set<std::string>> role_patterns;
  std::set<std::string> predicate_pos;
  // Tokens attached with these relations are never predicates.
  std::set<std::string> auxiliary_relations;
  // A verb attached to another verb through one of these relations shares
  // that verb's subject when it has none of its own. Only the syntactic
  // reward follows these links; the labelling functions do not.
  std::set<std::string> subject_sharing_relations;

  static PatternTable defaults();
  // Plain-text key/value file; see defaults() for the keys. Missing keys keep
  // their default value. Throws ParseError / IOError.
  static PatternTable load(const std::filesystem::path& path);
  static PatternTable parse(const std::string& text);
  std::string serialize() const;

  // Throws std::invalid_argument when relation sets overlap or a key is P.
  void validate() const;
  std::optional<Role> role_for(const std::string& deprel) const;
  bool is_predicate_token(const Token& token) const;

  friend bool operator==(const PatternTable&, const PatternTable&) = default;
};

// Predicate token indices in ascending order.
std::vector<int> identify_predicates(const ParsedSentence& sentence, const PatternTable& table);

// For each role, the first child of the predicate (surface order) attached
// through one of the role's relations.
std::map<Role, int> match_argument_heads(const ParsedSentence& sentence, int predicate,
                                         const PatternTable& table);

// Every token that counts as a headword of `role` for `predicate`: direct
// dependents through the role's relations, plus (for ARG1 only) the subject
// inherited over subject-sharing links.
std::vector<int> derived_headwords(const ParsedSentence& sentence, int predicate, Role role,
                                   const PatternTable& table);

// [min, max] of the subtree rooted at `head`, shrunk to the largest contiguous
// range around `head` that avoids `predicate` and every index in `blocked`.
Span expand_subtree_span(const ParsedSentence& sentence, int head, int predicate,
                         std::span<const int> blocked = {});

std::vector<TaggedInstance> generate_instances(const ParsedSentence& sentence,
                                               const PatternTable& table);

struct LabelingStats {
  std::size_t sentences = 0;
  std::size_t predicates = 0;
  std::size_t instances = 0;
  std::map<Role, std::size_t> role_counts;
};

// Labels a corpus, splitting sentences across `threads` workers. Output order
// matches input order regardless of the thread count.
std::vector<TaggedInstance> label_corpus(std::span<const ParsedSentence> sentences,
                                         const PatternTable& table, unsigned threads = 1,
                                         LabelingStats* stats = nullptr);

}  // namespace weakoie
