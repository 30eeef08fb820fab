#include <gtest/gtest.h>

#include <fstream>
#include <random>

#include <nlohmann/json.hpp>

#include "fixtures.hpp"
#include "weakoie/evaluator.hpp"

namespace weakoie {
namespace {

using testing::parragon;
using testing::TempDir;

GoldTuple gold(const std::string& id, int pred, std::map<Role, int> heads) {
  GoldTuple g;
  g.sentence_id = id;
  g.predicate_head = pred;
  g.role_heads = std::move(heads);
  return g;
}

Extraction pred(const std::string& id, Span p, std::map<Role, Span> roles, double c) {
  Extraction e;
  e.sentence_id = id;
  e.predicate_span = p;
  e.role_spans = std::move(roles);
  e.confidence = c;
  return e;
}

const GoldTuple kOperates = gold("parragon", 2, {{Role::kArg1, 1}, {Role::kArg2, 6}});

TEST(Match, HeadContainment) {
  EXPECT_TRUE(match(pred("parragon", {2, 2}, {{Role::kArg1, {1, 1}}, {Role::kArg2, {3, 6}}}, 0),
                    kOperates));
  EXPECT_FALSE(match(pred("parragon", {2, 2}, {{Role::kArg1, {1, 1}}, {Role::kArg2, {3, 5}}}, 0),
                     kOperates));
  EXPECT_FALSE(match(pred("parragon", {2, 2}, {{Role::kArg2, {3, 6}}}, 0), kOperates));
  EXPECT_FALSE(match(pred("parragon", {8, 8}, {{Role::kArg1, {1, 1}}, {Role::kArg2, {3, 6}}}, 0),
                     kOperates));
  EXPECT_FALSE(match(pred("other", {2, 2}, {{Role::kArg1, {1, 1}}, {Role::kArg2, {3, 6}}}, 0),
                     kOperates));
}

TEST(Match, ExtraRolesIgnoredAndConfidenceIrrelevant) {
  const Extraction e =
      pred("parragon", {2, 2}, {{Role::kArg1, {1, 1}}, {Role::kArg2, {6, 6}}, {Role::kArg3, {9, 10}}}, -3);
  EXPECT_TRUE(match(e, kOperates));
  Extraction shifted = e;
  shifted.confidence = 7.0;
  EXPECT_EQ(match(shifted, kOperates), match(e, kOperates));
}

TEST(Match, LexicalOverlapOption) {
  GoldTuple g = kOperates;
  g.surfaces[Role::kArg2] = "more than 35 markets";
  const ParsedSentence s = parragon();
  const Extraction e = pred("parragon", {2, 2}, {{Role::kArg1, {1, 1}}, {Role::kArg2, {3, 5}}}, 0);
  EXPECT_FALSE(match(e, g, &s, {}));
  EXPECT_TRUE(match(e, g, &s, MatchOptions{0.75}));
  EXPECT_FALSE(match(e, g, &s, MatchOptions{0.8}));
}

// Worked case 1: one correct prediction at -0.1, one incorrect at -0.9.
TEST(PrCurve, TwoThresholdSweep) {
  const std::vector<GoldTuple> g{kOperates, gold("parragon", 8, {{Role::kArg2, 10}})};
  const std::vector<Extraction> x{
      pred("parragon", {2, 2}, {{Role::kArg1, {1, 1}}, {Role::kArg2, {3, 6}}}, -0.1),
      pred("parragon", {8, 8}, {{Role::kArg2, {9, 9}}}, -0.9)};
  const auto points = pr_curve(x, g);
  ASSERT_EQ(points.size(), 2u);
  EXPECT_NEAR(points[0].recall, 0.5, 1e-9);
  EXPECT_NEAR(points[0].precision, 1.0, 1e-9);
  EXPECT_NEAR(points[1].recall, 0.5, 1e-9);
  EXPECT_NEAR(points[1].precision, 0.5, 1e-9);
  EXPECT_NEAR(auc(points), 0.5, 1e-9);
  EXPECT_NEAR(best_f1(points), 2.0 / 3.0, 1e-9);
}

TEST(Auc, Examples) {
  const std::vector<PrPoint> single{{1.0, 1.0, 0}};
  EXPECT_NEAR(auc(single), 1.0, 1e-12);
  // Worked case 2: 0.5 * 1.0 + 0.5 * 0.75
  const std::vector<PrPoint> two{{0.5, 1.0, 0}, {1.0, 0.5, 0}};
  EXPECT_NEAR(auc(two), 0.875, 1e-9);
  EXPECT_NEAR(best_f1(two), 2.0 / 3.0, 1e-9);
  EXPECT_EQ(auc(std::vector<PrPoint>{}), 0.0);
  EXPECT_EQ(best_f1(std::vector<PrPoint>{}), 0.0);
}

// Worked case 3: correct, wrong, correct in ranking order over 2 gold tuples.
TEST(PrCurve, InterleavedErrors) {
  const std::vector<GoldTuple> g{kOperates, gold("parragon", 8, {{Role::kArg2, 10}})};
  const std::vector<Extraction> x{
      pred("parragon", {8, 8}, {{Role::kArg2, {9, 10}}}, -0.9),
      pred("parragon", {2, 2}, {{Role::kArg1, {1, 1}}, {Role::kArg2, {6, 6}}}, -0.1),
      pred("parragon", {2, 2}, {{Role::kArg2, {3, 6}}}, -0.5)};
  std::vector<MatchDecision> decisions;
  const auto points = pr_curve(x, g, &decisions);
  ASSERT_EQ(points.size(), 3u);
  const double expected[3][2] = {{0.5, 1.0}, {0.5, 0.5}, {1.0, 2.0 / 3.0}};
  for (int i = 0; i < 3; ++i) {
    EXPECT_NEAR(points[static_cast<std::size_t>(i)].recall, expected[i][0], 1e-9);
    EXPECT_NEAR(points[static_cast<std::size_t>(i)].precision, expected[i][1], 1e-9);
  }
  // 0.5 * 1 + 0 + 0.5 * (0.5 + 2/3) / 2
  EXPECT_NEAR(auc(points), 0.5 + 0.25 * (0.5 + 2.0 / 3.0), 1e-9);
  EXPECT_NEAR(best_f1(points), 0.8, 1e-9);
  ASSERT_EQ(decisions.size(), 3u);
  EXPECT_EQ(decisions[0].extraction, 1u);
  EXPECT_EQ(decisions[0].gold, 0u);
  EXPECT_FALSE(decisions[1].gold);
  EXPECT_EQ(decisions[2].gold, 1u);
}

TEST(PrCurve, PerfectSystem) {
  const std::vector<GoldTuple> g{kOperates, gold("parragon", 8, {{Role::kArg2, 10}})};
  const std::vector<Extraction> x{
      pred("parragon", {2, 2}, {{Role::kArg1, {1, 1}}, {Role::kArg2, {3, 6}}}, -0.2),
      pred("parragon", {8, 8}, {{Role::kArg2, {9, 10}}}, -0.3)};
  const EvalReport r = evaluate(x, g);
  EXPECT_NEAR(r.pr_points.back().recall, 1.0, 1e-12);
  EXPECT_NEAR(r.pr_points.back().precision, 1.0, 1e-12);
  EXPECT_NEAR(r.auc, 1.0, 1e-9);
  EXPECT_NEAR(r.best_f1, 1.0, 1e-9);
  EXPECT_EQ(r.num_matched, 2u);
}

TEST(PrCurve, EmptyInputs) {
  const std::vector<GoldTuple> g{kOperates};
  const EvalReport r = evaluate(std::vector<Extraction>{}, g);
  EXPECT_TRUE(r.pr_points.empty());
  EXPECT_EQ(r.auc, 0.0);
  EXPECT_EQ(r.best_f1, 0.0);
  EXPECT_THROW(pr_curve(std::vector<Extraction>{}, std::vector<GoldTuple>{}), EmptyGold);
}

TEST(PrCurve, GreedyOneToOne) {
  const std::vector<GoldTuple> g{kOperates};
  const Extraction e = pred("parragon", {2, 2}, {{Role::kArg1, {1, 1}}, {Role::kArg2, {3, 6}}}, -0.1);
  Extraction dup = e;
  dup.confidence = -0.2;
  const auto points = pr_curve(std::vector<Extraction>{e, dup}, g);
  ASSERT_EQ(points.size(), 2u);
  EXPECT_NEAR(points[1].precision, 0.5, 1e-12);
  EXPECT_NEAR(points[1].recall, 1.0, 1e-12);
}

TEST(PrCurve, TiedConfidencesShareOnePoint) {
  const std::vector<GoldTuple> g{kOperates, gold("parragon", 8, {{Role::kArg2, 10}})};
  const std::vector<Extraction> x{
      pred("parragon", {2, 2}, {{Role::kArg1, {1, 1}}, {Role::kArg2, {3, 6}}}, -0.5),
      pred("parragon", {8, 8}, {{Role::kArg2, {9, 9}}}, -0.5)};
  const auto points = pr_curve(x, g);
  ASSERT_EQ(points.size(), 1u);
  EXPECT_NEAR(points[0].precision, 0.5, 1e-12);
  EXPECT_NEAR(points[0].recall, 0.5, 1e-12);
}

struct RandomSystem {
  std::vector<GoldTuple> gold;
  std::vector<Extraction> extractions;
};

// Gold tuples over fake 6-token sentences, predictions that hit or miss them.
RandomSystem random_system(std::mt19937_64& rng) {
  RandomSystem sys;
  const int n_gold = std::uniform_int_distribution<int>(1, 8)(rng);
  for (int i = 0; i < n_gold; ++i) {
    sys.gold.push_back(gold("s" + std::to_string(i), 2, {{Role::kArg1, 1}, {Role::kArg2, 4}}));
  }
  const int n_pred = std::uniform_int_distribution<int>(0, 12)(rng);
  std::uniform_real_distribution<double> conf(-3.0, 0.0);
  for (int k = 0; k < n_pred; ++k) {
    const std::string id = "s" + std::to_string(std::uniform_int_distribution<int>(0, n_gold - 1)(rng));
    const bool hit = rng() % 2 == 0;
    sys.extractions.push_back(pred(id, {2, 2}, {{Role::kArg1, {1, 1}}, {Role::kArg2, {hit ? 3 : 5, hit ? 4 : 6}}},
                                   std::round(conf(rng) * 4) / 4));
  }
  return sys;
}

TEST(EvaluatorProperties, AucBoundsAndMonotoneRecall) {
  std::mt19937_64 rng(31);
  for (int t = 0; t < 500; ++t) {
    const RandomSystem sys = random_system(rng);
    const EvalReport r = evaluate(sys.extractions, sys.gold);
    EXPECT_GE(r.auc, 0.0);
    EXPECT_LE(r.auc, 1.0 + 1e-12);
    for (std::size_t i = 0; i < r.pr_points.size(); ++i) {
      EXPECT_TRUE(r.pr_points[i].precision >= 0 && r.pr_points[i].precision <= 1);
      EXPECT_TRUE(r.pr_points[i].recall >= 0 && r.pr_points[i].recall <= 1);
      if (i > 0) {
        EXPECT_GE(r.pr_points[i].recall, r.pr_points[i - 1].recall);
        EXPECT_LT(r.pr_points[i].threshold, r.pr_points[i - 1].threshold);
      }
    }
  }
}

TEST(EvaluatorProperties, TopCorrectPredictionNeverLowersAuc) {
  std::mt19937_64 rng(32);
  for (int t = 0; t < 500; ++t) {
    RandomSystem sys = random_system(rng);
    const double before = evaluate(sys.extractions, sys.gold).auc;
    // A correct prediction for a gold tuple nobody has matched yet.
    const EvalReport r = evaluate(sys.extractions, sys.gold);
    std::vector<bool> matched(sys.gold.size(), false);
    for (const auto& d : r.decisions) {
      if (d.gold) matched[*d.gold] = true;
    }
    for (std::size_t g = 0; g < sys.gold.size(); ++g) {
      if (matched[g]) continue;
      sys.extractions.push_back(pred(sys.gold[g].sentence_id, {2, 2},
                                     {{Role::kArg1, {1, 1}}, {Role::kArg2, {4, 4}}}, 1.0));
      EXPECT_GE(evaluate(sys.extractions, sys.gold).auc, before - 1e-12);
      break;
    }
  }
}

class ConstantScorer : public SemanticScorer {
 public:
  double score(const Extraction& e, const ParsedSentence&) const override {
    return e.role_spans.size() == 2 ? 0.9 : 0.3;
  }
};

TEST(Rerank, Modes) {
  const std::vector<ParsedSentence> sentences{parragon()};
  const std::vector<Extraction> x{testing::parragon_has(), testing::parragon_operates()};
  std::vector<Extraction> input = x;
  input[0].confidence = -0.1;
  input[1].confidence = -0.4;
  const ConstantScorer scorer;
  EXPECT_EQ(rerank(input, sentences, scorer, RerankMode::kNone), input);
  const auto sem = rerank(input, sentences, scorer, RerankMode::kSem);
  EXPECT_NEAR(sem[0].confidence, std::log(0.3), 1e-12);
  const auto combined = rerank(input, sentences, scorer, RerankMode::kCombined);
  EXPECT_NEAR(combined[0].confidence, -0.1 + std::log(0.3), 1e-12);
  EXPECT_NEAR(combined[1].confidence, -0.4 + std::log(0.9), 1e-12);
  EXPECT_GT(combined[1].confidence, combined[0].confidence);
  EXPECT_EQ(parse_rerank_mode(rerank_mode_name(RerankMode::kCombined)), RerankMode::kCombined);
  std::vector<Extraction> orphan = input;
  orphan[0].sentence_id = "ghost";
  EXPECT_THROW(rerank(orphan, sentences, scorer, RerankMode::kSem), std::invalid_argument);
}

TEST(Report, FilesAreWritten) {
  TempDir dir;
  const std::vector<GoldTuple> g{kOperates};
  const std::vector<Extraction> x{
      pred("parragon", {2, 2}, {{Role::kArg1, {1, 1}}, {Role::kArg2, {3, 6}}}, -0.1)};
  const EvalReport r = evaluate(x, g);
  write_report(r, dir / "r.json");
  write_pr_data(r, dir / "pr.txt");
  std::ifstream in(dir / "r.json");
  const auto j = nlohmann::json::parse(in);
  EXPECT_EQ(j.at("auc").get<double>(), 1.0);
  EXPECT_EQ(j.at("decisions").size(), 1u);
  std::ifstream pr(dir / "pr.txt");
  std::string header, row;
  std::getline(pr, header);
  std::getline(pr, row);
  EXPECT_EQ(header, "# recall precision");
  EXPECT_EQ(row, "1 1");
}

}  // namespace
}  // namespace weakoie
