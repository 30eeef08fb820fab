#include <benchmark/benchmark.h>

#include <random>

#include "weakoie/corpus_io.hpp"
#include "weakoie/mle_trainer.hpp"
#include "weakoie/pattern_labeler.hpp"
#include "weakoie/reward.hpp"
#include "weakoie/rl_trainer.hpp"
#include "weakoie/tagger.hpp"

namespace {

using namespace weakoie;

const SyntheticCorpus& corpus() {
  static const SyntheticCorpus c = gen_synthetic(TemplateSet::mixed(0.3), 500, 9);
  return c;
}

TaggerModel make_model(int hidden) {
  TaggerConfig config;
  config.embedding_dim = 16;
  config.indicator_dim = 4;
  config.hidden_dim = hidden;
  return TaggerModel::init(config, Vocabulary::build(corpus().sentences));
}

TokenDistributions random_table(int m, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.01, 1.0);
  TokenDistributions d;
  d.probs.resize(m, static_cast<Eigen::Index>(d.labels.size()));
  for (int i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < d.probs.cols(); ++j) d.probs(i, j) = u(rng);
    d.probs.row(i) /= d.probs.row(i).sum();
  }
  return d;
}

void BM_LabelCorpus(benchmark::State& state) {
  const PatternTable table = PatternTable::defaults();
  for (auto _ : state) benchmark::DoNotOptimize(label_corpus(corpus().sentences, table));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(corpus().sentences.size()));
}
BENCHMARK(BM_LabelCorpus)->Unit(benchmark::kMillisecond);

void BM_BeamDecode(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  const int beam = static_cast<int>(state.range(1));
  const TokenDistributions d = random_table(m, 5);
  for (auto _ : state) benchmark::DoNotOptimize(beam_decode(d, beam, m / 2 + 1));
}
BENCHMARK(BM_BeamDecode)->ArgsProduct({{10, 30, 60}, {1, 3, 5}});

void BM_Forward(benchmark::State& state) {
  const TaggerModel model = make_model(static_cast<int>(state.range(0)));
  const ParsedSentence& s = corpus().sentences.front();
  for (auto _ : state) benchmark::DoNotOptimize(model.forward(s, 2));
}
BENCHMARK(BM_Forward)->Arg(32)->Arg(64);

void BM_ForwardBackward(benchmark::State& state) {
  const TaggerModel model = make_model(static_cast<int>(state.range(0)));
  const auto instances = label_corpus({corpus().sentences.data(), 1}, PatternTable::defaults());
  ParameterSet grads = model.params().zeros_like();
  for (auto _ : state) benchmark::DoNotOptimize(accumulate_mle_gradient(model, instances.front(), 1.0, grads));
}
BENCHMARK(BM_ForwardBackward)->Arg(32)->Arg(64);

void BM_RewardScore(benchmark::State& state) {
  const RewardFunction reward(PatternTable::defaults(), std::make_shared<SurrogateSemanticScorer>());
  const auto instances = label_corpus({corpus().sentences.data(), 20}, PatternTable::defaults());
  for (auto _ : state) {
    for (const auto& inst : instances) {
      benchmark::DoNotOptimize(reward.score(inst.sentence, inst.predicate_index, inst.tags));
    }
  }
}
BENCHMARK(BM_RewardScore);

}  // namespace
BENCHMARK_MAIN();
