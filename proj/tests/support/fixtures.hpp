#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "weakoie/core.hpp"
#include "weakoie/tagger.hpp"

namespace weakoie::testing {

// "Parragon operates more than 35 markets and has 10 offices ." with the
// conjunct "has" lacking a subject of its own.
inline ParsedSentence parragon() {
  return make_sentence("parragon", {
                                       {1, "Parragon", "PROPN", 2, "nsubj"},
                                       {2, "operates", "VERB", 0, "root"},
                                       {3, "more", "ADJ", 5, "advmod"},
                                       {4, "than", "ADP", 3, "fixed"},
                                       {5, "35", "NUM", 6, "nummod"},
                                       {6, "markets", "NOUN", 2, "dobj"},
                                       {7, "and", "CCONJ", 8, "cc"},
                                       {8, "has", "VERB", 2, "conj"},
                                       {9, "10", "NUM", 10, "nummod"},
                                       {10, "offices", "NOUN", 8, "dobj"},
                                       {11, ".", "PUNCT", 2, "punct"},
                                   });
}

inline const char* parragon_conllu() {
  return "# sent_id = parragon\n"
         "# text = Parragon operates more than 35 markets and has 10 offices .\n"
         "1\tParragon\tParragon\tPROPN\tNNP\t_\t2\tnsubj\t_\t_\n"
         "2\toperates\toperate\tVERB\tVBZ\t_\t0\troot\t_\t_\n"
         "3\tmore\tmore\tADJ\tJJR\t_\t5\tadvmod\t_\t_\n"
         "4\tthan\tthan\tADP\tIN\t_\t3\tfixed\t_\t_\n"
         "5\t35\t35\tNUM\tCD\t_\t6\tnummod\t_\t_\n"
         "6\tmarkets\tmarket\tNOUN\tNNS\t_\t2\tdobj\t_\t_\n"
         "7\tand\tand\tCCONJ\tCC\t_\t8\tcc\t_\t_\n"
         "8\thas\thave\tVERB\tVBZ\t_\t2\tconj\t_\t_\n"
         "9\t10\t10\tNUM\tCD\t_\t10\tnummod\t_\t_\n"
         "10\toffices\toffice\tNOUN\tNNS\t_\t8\tdobj\t_\t_\n"
         "11\t.\t.\tPUNCT\t.\t_\t2\tpunct\t_\t_\n"
         "\n";
}

inline TagSequence tags(const std::vector<std::string>& names) { return TagSequence::parse(names); }

// (Parragon; operates; more than 35 markets)
inline Extraction parragon_operates() {
  Extraction e;
  e.sentence_id = "parragon";
  e.predicate_span = {2, 2};
  e.role_spans = {{Role::kArg1, {1, 1}}, {Role::kArg2, {3, 6}}};
  return e;
}

// (has; 10 offices)
inline Extraction parragon_has() {
  Extraction e;
  e.sentence_id = "parragon";
  e.predicate_span = {8, 8};
  e.role_spans = {{Role::kArg2, {9, 10}}};
  return e;
}

// Tiny model over a fixed vocabulary.
inline TaggerModel tiny_model(std::uint64_t seed = 3, int layers = 2, int dim = 4) {
  TaggerConfig config;
  config.embedding_dim = dim;
  config.indicator_dim = 2;
  config.hidden_dim = dim;
  config.num_encoder_layers = layers;
  config.rng_seed = seed;
  return TaggerModel::init(config, Vocabulary::build(std::vector<ParsedSentence>{parragon()}));
}

// Random row-stochastic table with m rows over the full label set.
inline TokenDistributions random_distributions(int m, std::mt19937_64& rng) {
  TokenDistributions d;
  d.probs.resize(m, static_cast<Eigen::Index>(d.labels.size()));
  std::uniform_real_distribution<double> u(0.01, 1.0);
  for (int i = 0; i < m; ++i) {
    double total = 0.0;
    for (Eigen::Index j = 0; j < d.probs.cols(); ++j) total += d.probs(i, j) = u(rng);
    d.probs.row(i) /= total;
  }
  return d;
}

// Exhaustive oracle: every label sequence that is BIO well-formed and whose
// B-P (if any) sits on the predicate, ranked by log prob then label ids.
struct Ranked {
  std::vector<std::size_t> ids;
  double log_prob;
};

inline std::vector<Ranked> enumerate_oracle(const TokenDistributions& d, int predicate) {
  const int m = d.length();
  const LabelSet& labels = d.labels;
  const std::size_t L = labels.size();
  std::vector<Ranked> out;
  std::vector<std::size_t> ids(static_cast<std::size_t>(m), 0);
  while (true) {
    TagSequence t;
    bool p_ok = true;
    for (int i = 0; i < m; ++i) {
      const Label& l = labels.at(ids[static_cast<std::size_t>(i)]);
      t.labels.push_back(l);
      if (l.bio == Bio::kBegin && l.role == Role::kP && i + 1 != predicate) p_ok = false;
    }
    if (p_ok && validate_bio(t).empty()) {
      double lp = 0.0;
      for (int i = 0; i < m; ++i) {
        lp += std::log(d.probs(i, static_cast<Eigen::Index>(ids[static_cast<std::size_t>(i)])));
      }
      out.push_back({ids, lp});
    }
    int k = m - 1;
    while (k >= 0 && ++ids[static_cast<std::size_t>(k)] == L) ids[static_cast<std::size_t>(k--)] = 0;
    if (k < 0) break;
  }
  std::stable_sort(out.begin(), out.end(), [](const Ranked& a, const Ranked& b) {
    if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
    return a.ids < b.ids;
  });
  return out;
}

// Unique scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("weakoie-test-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace weakoie::testing
