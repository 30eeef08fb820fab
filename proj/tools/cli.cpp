#include "cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "weakoie/corpus_io.hpp"
#include "weakoie/evaluator.hpp"
#include "weakoie/mle_trainer.hpp"
#include "weakoie/pattern_labeler.hpp"
#include "weakoie/reward.hpp"
#include "weakoie/rl_trainer.hpp"
#include "weakoie/tagger.hpp"

namespace weakoie::cli {

namespace fs = std::filesystem;

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string config;
  std::uint64_t seed = 1;

  // label
  std::string conllu;
  std::string patterns;
  std::string out;
  unsigned threads = 1;

  // pretrain
  std::string instances;
  std::string metrics;
  int embedding_dim = 32;
  int indicator_dim = 8;
  int hidden_dim = 64;
  int layers = 2;
  int epochs = -1;  // per-command default when negative
  int batch_size = 16;
  double lr = -1.0;
  int patience = 3;
  double dev_fraction = 0.1;
  bool no_indicator = false;
  std::string embedder = "static-lookup";

  // rl-train / extract
  std::string model;
  std::string scorer;
  std::string scorer_url;
  std::string cache;
  int beam = 3;
  std::string baseline = "mean";
  std::string exploration = "beam";
  std::string dev_conllu;
  std::string dev_gold;
  std::string rerank = "none";

  // eval
  std::string extractions;
  std::string gold;
  std::string report;
  std::string pr_out;
  std::optional<double> lexical_overlap;

  // synth
  std::size_t count = 100;
  double out_of_pattern = 0.3;
  std::string template_name;
  std::string gold_out;
};

void add_seed(CLI::App* sub, Options& o) {
  sub->add_option("--seed", o.seed, "Seed for every random choice")->capture_default_str();
  sub->add_option("--config", o.config, "key = value file; command-line flags win");
}

void add_scorer(CLI::App* sub, Options& o) {
  sub->add_option("--scorer", o.scorer, "surrogate | adapter | adapter:URL (default: surrogate)");
  sub->add_option("--scorer-url", o.scorer_url, "Entailment adapter endpoint")
      ->envname(kScorerUrlEnv);
  sub->add_option("--cache", o.cache, "Entailment score cache (JSON lines)");
}

std::unique_ptr<CLI::App> build_app(Options& o) {
  auto app = std::make_unique<CLI::App>(
      "Weakly supervised open information extraction: pattern labelling, MLE pretraining, "
      "policy-gradient fine-tuning, extraction and evaluation");
  app->require_subcommand(1);

  auto* label = app->add_subcommand("label", "Label a parsed corpus with dependency patterns");
  label->add_option("--conllu", o.conllu, "Input CoNLL-U corpus")->required();
  label->add_option("--patterns", o.patterns, "Pattern table file (default table if omitted)");
  label->add_option("--out", o.out, "Output instances (JSON lines)")->required();
  label->add_option("--threads", o.threads, "Worker threads")->capture_default_str();
  add_seed(label, o);

  auto* pretrain = app->add_subcommand("pretrain", "Maximum-likelihood pretraining");
  pretrain->add_option("--instances", o.instances, "Labelled instances")->required();
  pretrain->add_option("--out", o.out, "Output checkpoint")->required();
  pretrain->add_option("--metrics", o.metrics, "Metrics log (default: <out>.metrics.jsonl)");
  pretrain->add_option("--embedding-dim", o.embedding_dim)->capture_default_str();
  pretrain->add_option("--indicator-dim", o.indicator_dim)->capture_default_str();
  pretrain->add_option("--hidden-dim", o.hidden_dim)->capture_default_str();
  pretrain->add_option("--layers", o.layers)->capture_default_str();
  pretrain->add_option("--beam", o.beam, "Decoding beam stored in the model")->capture_default_str();
  pretrain->add_option("--epochs", o.epochs, "Epochs (default 5)");
  pretrain->add_option("--batch-size", o.batch_size)->capture_default_str();
  pretrain->add_option("--lr", o.lr, "Step size (default 1e-3)");
  pretrain->add_option("--patience", o.patience, "Early-stop patience; 0 disables")
      ->capture_default_str();
  pretrain->add_option("--dev-fraction", o.dev_fraction, "Held-out share for early stopping")
      ->check(CLI::Range(0.0, 0.9))
      ->capture_default_str();
  pretrain->add_flag("--no-indicator", o.no_indicator, "Drop the predicate-indicator channel");
  pretrain->add_option("--embedder", o.embedder)
      ->check(CLI::IsMember({"static-lookup", "external-contextual"}))
      ->capture_default_str();
  add_seed(pretrain, o);

  auto* rl = app->add_subcommand("rl-train", "Policy-gradient fine-tuning");
  rl->add_option("--model", o.model, "Pretrained checkpoint")->required();
  rl->add_option("--conllu", o.conllu, "Unlabelled parsed corpus")->required();
  rl->add_option("--out", o.out, "Output checkpoint")->required();
  rl->add_option("--metrics", o.metrics, "Metrics log (default: <out>.metrics.jsonl)");
  rl->add_option("--beam", o.beam, "Explored candidates per predicate")->capture_default_str();
  rl->add_option("--baseline", o.baseline)->check(CLI::IsMember({"off", "mean"}))
      ->capture_default_str();
  rl->add_option("--exploration", o.exploration)->check(CLI::IsMember({"beam", "sample"}))
      ->capture_default_str();
  rl->add_option("--epochs", o.epochs, "Epochs (default 10)");
  rl->add_option("--batch-size", o.batch_size)->capture_default_str();
  rl->add_option("--lr", o.lr, "Step size (default 3e-4)");
  rl->add_option("--patterns", o.patterns, "Pattern table file");
  rl->add_option("--dev-conllu", o.dev_conllu, "Dev sentences for per-epoch reward");
  rl->add_option("--dev-gold", o.dev_gold, "Dev gold tuples for per-epoch F1");
  add_scorer(rl, o);
  add_seed(rl, o);

  auto* extract = app->add_subcommand("extract", "Extract tuples with a trained model");
  extract->add_option("--model", o.model, "Checkpoint")->required();
  extract->add_option("--conllu", o.conllu, "Parsed corpus")->required();
  extract->add_option("--out", o.out, "Output extractions (JSON lines)")->required();
  extract->add_option("--rerank", o.rerank)->check(CLI::IsMember({"none", "sem", "combined"}))
      ->capture_default_str();
  extract->add_option("--patterns", o.patterns, "Pattern table file");
  add_scorer(extract, o);
  add_seed(extract, o);

  auto* eval = app->add_subcommand("eval", "Score extractions against gold tuples");
  eval->add_option("--extractions", o.extractions)->required();
  eval->add_option("--gold", o.gold)->required();
  eval->add_option("--report", o.report, "JSON report")->required();
  eval->add_option("--pr-out", o.pr_out, "Two-column recall/precision file")->required();
  eval->add_option("--conllu", o.conllu, "Sentences (validates gold ids; needed for lexical mode)");
  eval->add_option("--lexical-overlap", o.lexical_overlap,
                   "Also accept roles covering this share of the gold tokens")
      ->check(CLI::Range(0.0, 1.0));
  add_seed(eval, o);

  auto* synth = app->add_subcommand("synth", "Generate a synthetic parsed corpus with gold tuples");
  synth->add_option("--n", o.count, "Sentences")->capture_default_str();
  synth->add_option("--out-of-pattern", o.out_of_pattern,
                    "Share of coordinated-VP frames the patterns miss")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  synth->add_option("--template", o.template_name, "Use a single template")
      ->check(CLI::IsMember({"svo", "svo+pp", "svoo", "coordinated-vp"}));
  synth->add_option("--conllu-out", o.conllu, "Output CoNLL-U")->required();
  synth->add_option("--gold-out", o.gold_out, "Output gold TSV")->required();
  add_seed(synth, o);
  return app;
}

std::map<std::string, std::string> read_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read config file " + path.string());
  std::map<std::string, std::string> out;
  std::string line;
  std::size_t lineno = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string();
    return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw UsageError(path.string() + ":" + std::to_string(lineno) + ": expected key = value");
    }
    out[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return out;
}

void parse_args(CLI::App& app, const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());
  app.parse(static_cast<int>(argv.size()), argv.data());
}

CLI::App* active_subcommand(const CLI::App& app) {
  auto subs = app.get_subcommands();
  return subs.empty() ? nullptr : subs.front();
}

void check_not_input(const std::string& output, std::initializer_list<std::string> inputs) {
  if (output.empty()) return;
  for (const auto& in : inputs) {
    if (in.empty()) continue;
    std::error_code ec;
    if (fs::exists(output) && fs::exists(in) && fs::equivalent(output, in, ec)) {
      throw UsageError("output " + output + " would overwrite input " + in);
    }
  }
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw IOError("cannot write " + path.string());
  return out;
}

PatternTable load_patterns(const Options& o) {
  return o.patterns.empty() ? PatternTable::defaults() : PatternTable::load(o.patterns);
}

TaggerModel load_model(const std::string& path) {
  // Checkpoints trained with the external-contextual embedder use the hashing provider.
  TaggerModel model = TaggerModel::load(path, nullptr);
  if (model.config().embedder_kind == EmbedderKind::kExternalContextual) {
    model.set_contextual_embedder(
        std::make_shared<HashingContextualEmbedder>(model.config().embedding_dim));
  }
  return model;
}

std::shared_ptr<const SemanticScorer> make_scorer(const Options& o,
                                                  std::shared_ptr<EntailmentCache>& cache) {
  if (o.scorer.empty() || o.scorer == "surrogate") {
    return std::make_shared<SurrogateSemanticScorer>();
  }
  std::string url;
  if (o.scorer == "adapter") {
    url = o.scorer_url;
  } else if (o.scorer.rfind("adapter:", 0) == 0) {
    url = o.scorer.substr(8);
  } else {
    throw UsageError("--scorer must be 'surrogate' or 'adapter:URL'");
  }
  if (url.empty()) {
    throw UsageError(std::string("--scorer adapter needs a URL (adapter:URL, --scorer-url or ") +
                     kScorerUrlEnv + ")");
  }
  cache = std::make_shared<EntailmentCache>();
  if (!o.cache.empty()) cache->load(o.cache);
  return std::make_shared<EntailmentSemanticScorer>(std::make_shared<HttpEntailmentScorer>(url),
                                                    cache);
}

void save_cache(const Options& o, const std::shared_ptr<EntailmentCache>& cache) {
  if (cache && !o.cache.empty()) cache->save(o.cache);
}

int cmd_label(const Options& o, std::ostream& out) {
  check_not_input(o.out, {o.conllu, o.patterns});
  const PatternTable table = load_patterns(o);
  table.validate();
  const auto sentences = read_conllu(fs::path(o.conllu));
  LabelingStats stats;
  const auto instances = label_corpus(sentences, table, std::max(1U, o.threads), &stats);
  write_instances(instances, fs::path(o.out));
  out << "sentences: " << stats.sentences << "\n"
      << "predicates: " << stats.predicates << "\n"
      << "instances: " << stats.instances << "\n";
  for (Role r : kArgumentRoles) {
    const auto it = stats.role_counts.find(r);
    const std::size_t n = it == stats.role_counts.end() ? 0 : it->second;
    const double share = stats.instances == 0 ? 0.0 : 100.0 * n / stats.instances;
    out << role_name(r) << ": " << n << " (" << std::fixed << std::setprecision(1) << share
        << "%)\n";
    out.unsetf(std::ios::floatfield);
  }
  return kExitOk;
}

int cmd_pretrain(const Options& o, std::ostream& out) {
  const std::string metrics_path = o.metrics.empty() ? o.out + ".metrics.jsonl" : o.metrics;
  check_not_input(o.out, {o.instances});
  check_not_input(metrics_path, {o.instances});
  auto instances = read_instances(fs::path(o.instances));
  if (instances.empty()) throw Error("no training instances in " + o.instances);
  const auto n_dev = static_cast<std::size_t>(o.dev_fraction * static_cast<double>(instances.size()));
  std::span<const TaggedInstance> all(instances);
  const auto train = all.first(instances.size() - n_dev);
  const auto dev = all.last(n_dev);

  TaggerConfig config;
  config.embedding_dim = o.embedding_dim;
  config.indicator_dim = o.indicator_dim;
  config.hidden_dim = o.hidden_dim;
  config.num_encoder_layers = o.layers;
  config.beam_size = o.beam;
  config.rng_seed = o.seed;
  config.use_predicate_indicator = !o.no_indicator;
  std::shared_ptr<const ContextualEmbedder> contextual;
  if (o.embedder == "external-contextual") {
    config.embedder_kind = EmbedderKind::kExternalContextual;
    contextual = std::make_shared<HashingContextualEmbedder>(config.embedding_dim);
  }
  std::vector<ParsedSentence> train_sentences;
  for (const auto& inst : train) train_sentences.push_back(inst.sentence);
  TaggerModel model = TaggerModel::init(config, Vocabulary::build(train_sentences), contextual);

  MleConfig mle;
  if (o.epochs >= 0) mle.epochs = o.epochs;
  mle.batch_size = o.batch_size;
  mle.patience = o.patience;
  if (o.lr > 0.0) mle.optimizer.learning_rate = o.lr;
  mle.seed = o.seed;
  auto log = open_output(metrics_path);
  const PretrainResult result = pretrain(model, train, dev, mle, &log);
  model.save(o.out);
  out << "trained " << result.metrics.size() << " epochs on " << train.size()
      << " instances; best epoch " << result.best_epoch << "\n";
  return kExitOk;
}

int cmd_rl_train(const Options& o, std::ostream& out) {
  const std::string metrics_path = o.metrics.empty() ? o.out + ".metrics.jsonl" : o.metrics;
  check_not_input(o.out, {o.model, o.conllu});
  check_not_input(metrics_path, {o.model, o.conllu});
  TaggerModel model = load_model(o.model);
  const auto sentences = read_conllu(fs::path(o.conllu));
  const PatternTable table = load_patterns(o);
  std::shared_ptr<EntailmentCache> cache;
  RewardFunction reward(table, make_scorer(o, cache));

  RlConfig config;
  config.beam_size = o.beam;
  config.baseline = parse_baseline_mode(o.baseline);
  config.exploration = parse_exploration_mode(o.exploration);
  if (o.epochs >= 0) config.epochs = o.epochs;
  config.batch_size = o.batch_size;
  if (o.lr > 0.0) config.optimizer.learning_rate = o.lr;
  config.seed = o.seed;

  std::vector<ParsedSentence> dev_sentences;
  std::vector<GoldTuple> dev_gold;
  std::optional<RlDevSet> dev;
  if (!o.dev_conllu.empty()) {
    dev_sentences = read_conllu(fs::path(o.dev_conllu));
    if (!o.dev_gold.empty()) {
      std::vector<std::string> warnings;
      dev_gold = read_gold(fs::path(o.dev_gold), dev_sentences, &warnings);
    }
    dev = RlDevSet{dev_sentences, dev_gold};
  } else if (!o.dev_gold.empty()) {
    throw UsageError("--dev-gold needs --dev-conllu");
  }

  auto log = open_output(metrics_path);
  const RlResult result = train_rl(model, sentences, reward, config, dev, &log);
  model.save(o.out);
  save_cache(o, cache);
  if (!result.metrics.empty()) {
    out << "final mean reward " << result.metrics.back().mean_reward << " after "
        << result.metrics.size() << " epochs\n";
  }
  return kExitOk;
}

int cmd_extract(const Options& o, std::ostream& out) {
  check_not_input(o.out, {o.model, o.conllu});
  const TaggerModel model = load_model(o.model);
  const auto sentences = read_conllu(fs::path(o.conllu));
  const PatternTable table = load_patterns(o);
  auto extractions = extract_corpus(model, sentences, table);
  const RerankMode mode = parse_rerank_mode(o.rerank);
  std::shared_ptr<EntailmentCache> cache;
  if (mode != RerankMode::kNone) {
    extractions = rerank(extractions, sentences, *make_scorer(o, cache), mode);
  }
  write_extractions(extractions, fs::path(o.out));
  save_cache(o, cache);
  out << "extractions: " << extractions.size() << "\n";
  return kExitOk;
}

int cmd_eval(const Options& o, std::ostream& out, std::ostream& err) {
  check_not_input(o.report, {o.extractions, o.gold, o.conllu});
  check_not_input(o.pr_out, {o.extractions, o.gold, o.conllu});
  const auto extractions = read_extractions(fs::path(o.extractions));
  std::vector<ParsedSentence> sentences;
  std::vector<GoldTuple> gold;
  if (!o.conllu.empty()) {
    sentences = read_conllu(fs::path(o.conllu));
    std::vector<std::string> warnings;
    gold = read_gold(fs::path(o.gold), sentences, &warnings);
    for (const auto& w : warnings) err << "warning: " << w << "\n";
  } else {
    if (o.lexical_overlap) throw UsageError("--lexical-overlap needs --conllu");
    gold = read_gold(fs::path(o.gold));
  }
  MatchOptions options;
  options.lexical_overlap = o.lexical_overlap;
  const EvalReport report = evaluate(extractions, gold, sentences, options);
  write_report(report, o.report);
  write_pr_data(report, o.pr_out);
  out << "auc " << report.auc << "\nbest_f1 " << report.best_f1 << "\nmatched "
      << report.num_matched << "/" << report.num_gold << "\n";
  return kExitOk;
}

int cmd_synth(const Options& o, std::ostream& out) {
  TemplateSet templates = TemplateSet::mixed(o.out_of_pattern);
  if (!o.template_name.empty()) {
    for (TemplateKind k : {TemplateKind::kSvo, TemplateKind::kSvoPp, TemplateKind::kSvoo,
                           TemplateKind::kCoordinatedVp}) {
      if (template_name(k) == o.template_name) templates = TemplateSet::only(k);
    }
  }
  const SyntheticCorpus corpus = gen_synthetic(templates, o.count, o.seed);
  write_conllu(corpus.sentences, fs::path(o.conllu));
  write_gold(corpus.gold, fs::path(o.gold_out));
  out << "sentences: " << corpus.sentences.size() << "\ngold tuples: " << corpus.gold.size()
      << "\n";
  return kExitOk;
}

int dispatch(const CLI::App& app, const Options& o, std::ostream& out, std::ostream& err) {
  const std::string name = active_subcommand(app)->get_name();
  if (name == "label") return cmd_label(o, out);
  if (name == "pretrain") return cmd_pretrain(o, out);
  if (name == "rl-train") return cmd_rl_train(o, out);
  if (name == "extract") return cmd_extract(o, out);
  if (name == "eval") return cmd_eval(o, out, err);
  return cmd_synth(o, out);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options first;
  auto app = build_app(first);
  try {
    parse_args(*app, args);
  } catch (const CLI::ParseError& e) {
    const int code = app->exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  Options options;
  std::unique_ptr<CLI::App> final_app;
  try {
    if (first.config.empty()) {
      options = first;
      final_app = std::move(app);
    } else {
      CLI::App* sub = active_subcommand(*app);
      std::vector<std::string> merged = args;
      for (const auto& [key, value] : read_config(first.config)) {
        const CLI::Option* opt = sub->get_option_no_throw("--" + key);
        if (opt == nullptr || key == "config") {
          throw UsageError("unknown key '" + key + "' in " + first.config);
        }
        if (opt->count() == 0) merged.push_back("--" + key + "=" + value);
      }
      final_app = build_app(options);
      parse_args(*final_app, merged);
    }
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n";
    return kExitUsage;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    return dispatch(*final_app, options, out, err);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
}

}  // namespace weakoie::cli
