#pragma once

// Readers and writers for parsed corpora, gold tuples, labelled instances and
// extraction records, plus a deterministic synthetic corpus generator.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "weakoie/core.hpp"

namespace weakoie {

struct GoldTuple {
  std::string sentence_id;
  int predicate_head = 0;
  std::map<Role, int> role_heads;         // ARG1..ARG3
  std::map<Role, std::string> surfaces;   // display only; may include P

  friend bool operator==(const GoldTuple&, const GoldTuple&) = default;
};

// CoNLL-U: ID, FORM, UPOS, HEAD and DEPREL are used. Multiword ranges and
// empty nodes are skipped. `# sent_id` and `# text` comments are honoured.
std::vector<ParsedSentence> read_conllu(std::istream& in);
std::vector<ParsedSentence> read_conllu(const std::filesystem::path& path);
void write_conllu(std::span<const ParsedSentence> sentences, std::ostream& out);
void write_conllu(std::span<const ParsedSentence> sentences, const std::filesystem::path& path);

// Gold TSV rows: sentence_id, predicate_head, role, role_head[, surface].
// A role of P records the predicate surface only. Rows are grouped by
// (sentence_id, predicate_head) in first-appearance order.
std::vector<GoldTuple> read_gold(std::istream& in);
std::vector<GoldTuple> read_gold(const std::filesystem::path& path);

// Validating variant: rows naming unknown sentences are skipped and reported
// in `warnings`; out-of-range heads raise ParseError.
std::vector<GoldTuple> read_gold(const std::filesystem::path& path,
                                 std::span<const ParsedSentence> sentences,
                                 std::vector<std::string>* warnings);
void write_gold(std::span<const GoldTuple> gold, std::ostream& out);
void write_gold(std::span<const GoldTuple> gold, const std::filesystem::path& path);

// One JSON object per line.
void write_extractions(std::span<const Extraction> extractions, std::ostream& out);
void write_extractions(std::span<const Extraction> extractions,
                       const std::filesystem::path& path);
std::vector<Extraction> read_extractions(std::istream& in);
std::vector<Extraction> read_extractions(const std::filesystem::path& path);

// Labelled instances carry their full parse so training needs no other input.
void write_instances(std::span<const TaggedInstance> instances, std::ostream& out);
void write_instances(std::span<const TaggedInstance> instances,
                     const std::filesystem::path& path);
std::vector<TaggedInstance> read_instances(std::istream& in);
std::vector<TaggedInstance> read_instances(const std::filesystem::path& path);

enum class TemplateKind : std::uint8_t {
  kSvo,             // Subj Verb Obj .
  kSvoPp,           // Subj Verb Obj Prep Noun .
  kSvoo,            // Subj Verb IObj Obj .
  kCoordinatedVp,   // Subj Verb Obj and Verb Obj .  (second verb has no subject child)
};

std::string_view template_name(TemplateKind kind);

struct TemplateSet {
  std::vector<std::pair<TemplateKind, double>> weights;

  // In-pattern SVO and SVO+PP frames plus the given share of coordinated VPs
  // whose second subject is only reachable across the coordination link.
  // SVOO frames are opt-in through `only` or explicit weights.
  static TemplateSet mixed(double out_of_pattern_fraction = 0.3);
  static TemplateSet only(TemplateKind kind);
};

// Whether the pattern table's labelling functions recover every gold tuple of
// sentences built from this template.
bool is_in_pattern(TemplateKind kind);

struct SyntheticCorpus {
  std::vector<ParsedSentence> sentences;
  std::vector<GoldTuple> gold;
  std::vector<TemplateKind> kinds;  // parallel to sentences
};

SyntheticCorpus gen_synthetic(const TemplateSet& templates, std::size_t n, std::uint64_t seed);

// Sentences [0, n - held_out) and [n - held_out, n) with their gold tuples.
std::pair<SyntheticCorpus, SyntheticCorpus> split_corpus(const SyntheticCorpus& corpus,
                                                         std::size_t held_out);
// Keeps the sentences (and their gold) whose template's in-pattern status
// equals `in_pattern`.
SyntheticCorpus filter_corpus(const SyntheticCorpus& corpus, bool in_pattern);

}  // namespace weakoie
