#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "fixtures.hpp"
#include "weakoie/corpus_io.hpp"
#include "weakoie/evaluator.hpp"
#include "weakoie/mle_trainer.hpp"
#include "weakoie/pattern_labeler.hpp"
#include "weakoie/rl_trainer.hpp"

namespace weakoie {
namespace {

using testing::parragon;
using testing::tiny_model;

TaggedInstance parragon_instance(int which) {
  return generate_instances(parragon(), PatternTable::defaults()).at(static_cast<std::size_t>(which));
}

TEST(MleLoss, CertainModelHasZeroLoss) {
  TokenDistributions d;
  d.probs = Eigen::MatrixXd::Zero(3, 9);
  d.probs(0, 3) = d.probs(1, 1) = d.probs(2, 5) = 1.0;
  EXPECT_EQ(mle_loss(d, TagSequence::parse({"B-ARG1", "B-P", "B-ARG2"})), 0.0);
}

TEST(MleLoss, UniformModel) {
  for (int m = 1; m <= 6; ++m) {
    TokenDistributions d;
    d.probs = Eigen::MatrixXd::Constant(m, 9, 1.0 / 9.0);
    TagSequence t;
    for (int i = 0; i < m; ++i) t.labels.push_back(Label::outside());
    EXPECT_NEAR(mle_loss(d, t), m * std::log(9.0), 1e-12);
  }
}

TEST(MleLoss, HandTable) {
  TokenDistributions d;
  d.probs = Eigen::MatrixXd::Constant(2, 9, 0.3 / 8.0);
  d.probs(0, 3) = 0.7;
  d.probs(1, 1) = 0.2;
  // -(log 0.7 + log 0.2)
  EXPECT_NEAR(mle_loss(d, TagSequence::parse({"B-ARG1", "B-P"})), 1.9661128563728327, 1e-9);
}

TEST(MleLoss, ZeroProbabilityIsClamped) {
  TokenDistributions d;
  d.probs = Eigen::MatrixXd::Zero(2, 9);
  d.probs(0, 1) = 1.0;
  d.probs(1, 0) = 1.0;
  std::size_t clamped = 0;
  const double loss = mle_loss(d, TagSequence::parse({"B-P", "B-ARG2"}), &clamped);
  EXPECT_EQ(clamped, 1u);
  EXPECT_NEAR(loss, -std::log(kProbabilityFloor), 1e-9);
}

TEST(MleLoss, NonNegativeOnRandomTables) {
  std::mt19937_64 rng(4);
  const LabelSet labels = LabelSet::full();
  for (int t = 0; t < 300; ++t) {
    const int m = std::uniform_int_distribution<int>(1, 8)(rng);
    const TokenDistributions d = testing::random_distributions(m, rng);
    TagSequence tags;
    for (int i = 0; i < m; ++i) tags.labels.push_back(labels.at(rng() % labels.size()));
    EXPECT_GT(mle_loss(d, tags), 0.0);
  }
}

TEST(MleLoss, ModelVariantMatchesDistributions) {
  const TaggerModel model = tiny_model();
  const TaggedInstance inst = parragon_instance(0);
  EXPECT_EQ(mle_loss(model, inst),
            mle_loss(model.distributions(inst.sentence, inst.predicate_index), inst.tags));
}

TEST(GradCheck, TinyModels) {
  for (int layers : {1, 2, 3}) {
    for (int which : {0, 1}) {
      const TaggerModel model = tiny_model(static_cast<std::uint64_t>(layers * 10 + which), layers);
      const GradCheckResult r = grad_check(model, parragon_instance(which), 1e-4, 16, 7);
      EXPECT_GT(r.checked, 0u);
      EXPECT_LT(r.max_relative_error, 1e-3) << "layers " << layers << " instance " << which;
    }
  }
}

TEST(GradCheck, ContextualAndAblatedModels) {
  TaggerConfig config = tiny_model().config();
  config.embedder_kind = EmbedderKind::kExternalContextual;
  const TaggerModel contextual = TaggerModel::init(
      config, Vocabulary(), std::make_shared<HashingContextualEmbedder>(config.embedding_dim));
  EXPECT_LT(grad_check(contextual, parragon_instance(0), 1e-4).max_relative_error, 1e-3);

  config = tiny_model().config();
  config.use_predicate_indicator = false;
  const TaggerModel ablated =
      TaggerModel::init(config, Vocabulary::build(std::vector<ParsedSentence>{parragon()}));
  EXPECT_LT(grad_check(ablated, parragon_instance(1), 1e-4).max_relative_error, 1e-3);
}

TEST(GradCheck, ZeroDisplacementReproducesLoss) {
  TaggerModel model = tiny_model();
  const TaggedInstance inst = parragon_instance(0);
  const double before = mle_loss(model, inst);
  for (auto& p : model.mutable_params().entries()) p.value(0, 0) += 0.0;
  EXPECT_EQ(mle_loss(model, inst), before);
}

TEST(GradCheck, DetectsWrongGradient) {
  const TaggerModel model = tiny_model();
  const TaggedInstance inst = parragon_instance(0);
  ParameterSet wrong = model.params().zeros_like();
  accumulate_mle_gradient(model, inst, 2.0, wrong);
  const auto r = check_gradient(model, wrong, [&](const TaggerModel& m) { return mle_loss(m, inst); },
                                1e-4, 8, 1);
  EXPECT_GT(r.max_relative_error, 0.3);
}

std::vector<TaggedInstance> small_corpus(std::size_t n, std::uint64_t seed) {
  const auto c = gen_synthetic(TemplateSet::only(TemplateKind::kSvo), n, seed);
  return label_corpus(c.sentences, PatternTable::defaults());
}

TaggerModel fresh_model(std::span<const TaggedInstance> instances, std::uint64_t seed) {
  TaggerConfig config;
  config.embedding_dim = 8;
  config.indicator_dim = 2;
  config.hidden_dim = 8;
  config.num_encoder_layers = 1;
  config.rng_seed = seed;
  std::vector<ParsedSentence> sentences;
  for (const auto& i : instances) sentences.push_back(i.sentence);
  return TaggerModel::init(config, Vocabulary::build(sentences));
}

TEST(Pretrain, DeterministicPerSeed) {
  const auto data = small_corpus(60, 3);
  std::span<const TaggedInstance> all(data);
  MleConfig config;
  config.epochs = 3;
  auto run = [&](std::uint64_t seed) {
    TaggerModel model = fresh_model(data, 1);
    config.seed = seed;
    std::ostringstream log;
    pretrain(model, all.first(50), all.last(10), config, &log);
    return std::make_pair(log.str(), model.params());
  };
  const auto a = run(1);
  const auto b = run(1);
  const auto c = run(2);
  EXPECT_EQ(a.first, b.first);
  EXPECT_EQ(a.second, b.second);
  EXPECT_NE(a.first, c.first);
}

TEST(Pretrain, MetricsLogHasOneRecordPerEpoch) {
  const auto data = small_corpus(40, 5);
  std::span<const TaggedInstance> all(data);
  TaggerModel model = fresh_model(data, 2);
  MleConfig config;
  config.epochs = 4;
  config.patience = 0;
  std::ostringstream log;
  const auto result = pretrain(model, all.first(30), all.last(10), config, &log);
  ASSERT_EQ(result.metrics.size(), 4u);
  std::istringstream in(log.str());
  std::string line;
  int epoch = 0;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    EXPECT_EQ(j.at("epoch").get<int>(), ++epoch);
    EXPECT_TRUE(j.contains("train_loss") && j.contains("dev_loss") && j.contains("dev_f1"));
  }
  EXPECT_EQ(epoch, 4);
  EXPECT_LT(result.metrics.back().train_loss, result.metrics.front().train_loss);
}

TEST(Pretrain, NonFiniteLossAborts) {
  const auto data = small_corpus(10, 5);
  TaggerModel model = fresh_model(data, 2);
  model.mutable_params().entries().back().value.setConstant(std::numeric_limits<double>::quiet_NaN());
  EXPECT_THROW(pretrain(model, data, {}, MleConfig{}), NonFiniteLoss);
}

TEST(Pretrain, EmptyCorpusRejected) {
  TaggerModel model = tiny_model();
  EXPECT_THROW(pretrain(model, {}, {}, MleConfig{}), std::invalid_argument);
}

TEST(Pretrain, InPatternHeldOutF1) {
  TemplateSet in{{{TemplateKind::kSvo, 0.6}, {TemplateKind::kSvoPp, 0.4}}};
  const auto corpus = gen_synthetic(in, 900, 12);
  const auto [train, test] = split_corpus(corpus, 200);
  const auto instances = label_corpus(train.sentences, PatternTable::defaults());
  TaggerConfig config;
  config.embedding_dim = 16;
  config.indicator_dim = 4;
  config.hidden_dim = 32;
  config.rng_seed = 7;
  TaggerModel model = TaggerModel::init(config, Vocabulary::build(train.sentences));
  std::span<const TaggedInstance> all(instances);
  pretrain(model, all.first(all.size() - 100), all.last(100), MleConfig{});
  const auto extractions = extract_corpus(model, test.sentences, PatternTable::defaults());
  EXPECT_GE(evaluate(extractions, test.gold).best_f1, 0.9);
}

}  // namespace
}  // namespace weakoie
