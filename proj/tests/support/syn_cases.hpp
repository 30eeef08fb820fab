#pragma once

#include <map>
#include <string>
#include <vector>

#include "fixtures.hpp"

namespace weakoie::testing {

inline Extraction tuple(Span p, std::map<Role, Span> roles, const std::string& id = "parragon") {
  Extraction e;
  e.sentence_id = id;
  e.predicate_span = p;
  e.role_spans = std::move(roles);
  return e;
}

inline ParsedSentence aux_sentence() {
  return make_sentence("aux", {{1, "Parragon", "PROPN", 4, "nsubj"},
                               {2, "has", "VERB", 4, "aux"},
                               {3, "been", "VERB", 4, "aux"},
                               {4, "operating", "VERB", 0, "root"},
                               {5, "stores", "NOUN", 4, "obj"},
                               {6, ".", "PUNCT", 4, "punct"}});
}

struct SynCase {
  const char* name;
  bool parragon_sentence;
  Extraction extraction;
  int expected;
};

// Hand-checked syntactic-constraint cases over the Parragon and auxiliary sentences.
inline std::vector<SynCase> syn_hand_suite() {
  using R = Role;
  return {
      {"operates full", true, tuple({2, 2}, {{R::kArg1, {1, 1}}, {R::kArg2, {3, 6}}}), 1},
      {"has with shared subject", true, tuple({8, 8}, {{R::kArg1, {1, 1}}, {R::kArg2, {9, 10}}}), 1},
      {"has without subject", true, tuple({8, 8}, {{R::kArg2, {9, 10}}}), 1},
      {"object misses headword", true, tuple({2, 2}, {{R::kArg1, {1, 1}}, {R::kArg2, {3, 5}}}), -1},
      {"adjective predicate", true, tuple({3, 3}, {{R::kArg2, {6, 6}}}), -1},
      {"punctuation predicate", true, tuple({11, 11}, {}), -1},
      {"bare verb", true, tuple({2, 2}, {}), 1},
      {"object of the other verb", true, tuple({2, 2}, {{R::kArg1, {1, 1}}, {R::kArg2, {9, 10}}}), -1},
      {"has with operates object", true, tuple({8, 8}, {{R::kArg2, {3, 6}}}), -1},
      {"object head only", true, tuple({2, 2}, {{R::kArg2, {6, 6}}}), 1},
      {"subject span holds object", true, tuple({2, 2}, {{R::kArg1, {3, 6}}}), -1},
      {"no ditransitive head", true, tuple({2, 2}, {{R::kArg3, {6, 6}}}), -1},
      {"wide predicate span", true, tuple({1, 2}, {{R::kArg2, {3, 6}}}), 1},
      {"conjunction in predicate", true, tuple({7, 8}, {{R::kArg1, {1, 1}}, {R::kArg2, {9, 10}}}), 1},
      {"long object", true, tuple({2, 2}, {{R::kArg1, {1, 1}}, {R::kArg2, {4, 10}}}), 1},
      {"has subject only", true, tuple({8, 8}, {{R::kArg1, {1, 1}}}), 1},
      {"verb as subject", true, tuple({8, 8}, {{R::kArg1, {2, 2}}}), -1},
      {"extra third argument", true,
       tuple({2, 2}, {{R::kArg1, {1, 1}}, {R::kArg2, {3, 6}}, {R::kArg3, {9, 10}}}), -1},
      {"auxiliary predicate", false, tuple({2, 2}, {{R::kArg1, {1, 1}}}, "aux"), -1},
      {"main verb after auxiliaries", false,
       tuple({4, 4}, {{R::kArg1, {1, 1}}, {R::kArg2, {5, 5}}}, "aux"), 1},
  };
}

}  // namespace weakoie::testing
