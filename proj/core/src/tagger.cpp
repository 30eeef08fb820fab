#include "weakoie/tagger.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace weakoie {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using nlohmann::json;

namespace {

constexpr char kMagic[8] = {'W', 'O', 'I', 'E', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kFormatVersion = 1;

VectorXd sigmoid(const VectorXd& z) {
  return z.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
}

VectorXd softmax(const VectorXd& logits) {
  const double mx = logits.maxCoeff();
  VectorXd e = (logits.array() - mx).exp();
  return e / e.sum();
}

std::string layer_name(int layer, const char* part) {
  return "encoder." + std::to_string(layer) + "." + part;
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

// Runs one LSTM direction; `hidden_out` is indexed by position.
void lstm_forward(const MatrixXd& W, const VectorXd& b, const std::vector<VectorXd>& xs,
                  bool reverse, int H, ForwardPass::Direction& d,
                  std::vector<VectorXd>& hidden_out) {
  const int m = static_cast<int>(xs.size());
  const Eigen::Index D = xs.empty() ? 0 : xs.front().size();
  VectorXd h = VectorXd::Zero(H);
  VectorXd c = VectorXd::Zero(H);
  d.inputs.resize(m);
  d.gates.resize(m);
  d.cells.resize(m);
  d.hidden.resize(m);
  hidden_out.resize(m);
  for (int s = 0; s < m; ++s) {
    const int t = reverse ? m - 1 - s : s;
    VectorXd in(D + H);
    in << xs[t], h;
    const VectorXd z = W * in + b;
    VectorXd gates(4 * H);
    gates.segment(0, H) = sigmoid(z.segment(0, H));
    gates.segment(H, H) = sigmoid(z.segment(H, H));
    gates.segment(2 * H, H) = z.segment(2 * H, H).array().tanh();
    gates.segment(3 * H, H) = sigmoid(z.segment(3 * H, H));
    c = gates.segment(H, H).cwiseProduct(c) + gates.segment(0, H).cwiseProduct(gates.segment(2 * H, H));
    h = gates.segment(3 * H, H).cwiseProduct(VectorXd(c.array().tanh()));
    d.inputs[s] = std::move(in);
    d.gates[s] = std::move(gates);
    d.cells[s] = c;
    d.hidden[s] = h;
    hidden_out[t] = h;
  }
}

// Backpropagation through time for one direction. `dh` and `dx` are indexed by position.
void lstm_backward(const MatrixXd& W, const ForwardPass::Direction& d, bool reverse, int H,
                   const std::vector<VectorXd>& dh, MatrixXd& dW, MatrixXd& db,
                   std::vector<VectorXd>& dx) {
  const int m = static_cast<int>(d.inputs.size());
  if (m == 0) return;
  const Eigen::Index D = d.inputs.front().size() - H;
  VectorXd dh_next = VectorXd::Zero(H);
  VectorXd dc_next = VectorXd::Zero(H);
  VectorXd dz(4 * H);
  for (int s = m - 1; s >= 0; --s) {
    const int t = reverse ? m - 1 - s : s;
    const VectorXd dht = dh[t] + dh_next;
    const auto i = d.gates[s].segment(0, H).array();
    const auto f = d.gates[s].segment(H, H).array();
    const auto g = d.gates[s].segment(2 * H, H).array();
    const auto o = d.gates[s].segment(3 * H, H).array();
    const Eigen::ArrayXd tc = d.cells[s].array().tanh();
    const Eigen::ArrayXd c_prev = s > 0 ? Eigen::ArrayXd(d.cells[s - 1].array()) : Eigen::ArrayXd::Zero(H);
    const Eigen::ArrayXd dc = dht.array() * o * (1.0 - tc.square()) + dc_next.array();
    dz.segment(0, H) = (dc * g * i * (1.0 - i)).matrix();
    dz.segment(H, H) = (dc * c_prev * f * (1.0 - f)).matrix();
    dz.segment(2 * H, H) = (dc * i * (1.0 - g.square())).matrix();
    dz.segment(3 * H, H) = (dht.array() * tc * o * (1.0 - o)).matrix();
    dc_next = (dc * f).matrix();
    dW.noalias() += dz * d.inputs[s].transpose();
    db.col(0) += dz;
    const VectorXd din = W.transpose() * dz;
    dx[t] += din.head(D);
    dh_next = din.tail(H);
  }
}

json config_to_json(const TaggerConfig& c) {
  return {{"embedding_dim", c.embedding_dim},
          {"indicator_dim", c.indicator_dim},
          {"hidden_dim", c.hidden_dim},
          {"num_encoder_layers", c.num_encoder_layers},
          {"label_set", c.label_set.names()},
          {"beam_size", c.beam_size},
          {"rng_seed", c.rng_seed},
          {"embedder_kind", std::string(embedder_kind_name(c.embedder_kind))},
          {"use_predicate_indicator", c.use_predicate_indicator}};
}

TaggerConfig config_from_json(const json& j) {
  TaggerConfig c;
  c.embedding_dim = j.at("embedding_dim").get<int>();
  c.indicator_dim = j.at("indicator_dim").get<int>();
  c.hidden_dim = j.at("hidden_dim").get<int>();
  c.num_encoder_layers = j.at("num_encoder_layers").get<int>();
  c.label_set = LabelSet::from_names(j.at("label_set").get<std::vector<std::string>>());
  c.beam_size = j.at("beam_size").get<int>();
  c.rng_seed = j.at("rng_seed").get<std::uint64_t>();
  const auto kind = j.at("embedder_kind").get<std::string>();
  if (kind == embedder_kind_name(EmbedderKind::kStaticLookup)) {
    c.embedder_kind = EmbedderKind::kStaticLookup;
  } else if (kind == embedder_kind_name(EmbedderKind::kExternalContextual)) {
    c.embedder_kind = EmbedderKind::kExternalContextual;
  } else {
    throw ParseError("unknown embedder kind '" + kind + "'");
  }
  c.use_predicate_indicator = j.at("use_predicate_indicator").get<bool>();
  return c;
}

struct ParamShape {
  std::string name;
  Eigen::Index rows;
  Eigen::Index cols;
};

std::vector<ParamShape> parameter_layout(const TaggerConfig& config, int vocab_size) {
  const int E = config.embedding_dim;
  const int K = config.indicator_dim;
  const int H = config.hidden_dim;
  std::vector<ParamShape> out;
  if (config.embedder_kind == EmbedderKind::kStaticLookup) out.push_back({"embed.words", vocab_size, E});
  out.push_back({"embed.indicator", 2, K});
  for (int l = 0; l < config.num_encoder_layers; ++l) {
    const int D = l == 0 ? E + K : 2 * H;
    for (const char* dir : {"fwd", "bwd"}) {
      out.push_back({layer_name(l, dir) + ".W", 4 * H, D + H});
      out.push_back({layer_name(l, dir) + ".b", 4 * H, 1});
    }
    if (l > 0) {
      out.push_back({layer_name(l, "highway.W"), 2 * H, 2 * H});
      out.push_back({layer_name(l, "highway.b"), 2 * H, 1});
    }
  }
  const auto L = static_cast<Eigen::Index>(config.label_set.size());
  out.push_back({"classifier.W", L, 2 * H});
  out.push_back({"classifier.b", L, 1});
  return out;
}

}  // namespace

std::string_view embedder_kind_name(EmbedderKind kind) {
  return kind == EmbedderKind::kStaticLookup ? "static-lookup" : "external-contextual";
}

void TaggerConfig::validate() const {
  if (embedding_dim < 1 || indicator_dim < 1 || hidden_dim < 1 || num_encoder_layers < 1) {
    throw std::invalid_argument("tagger dimensions must be >= 1");
  }
  if (beam_size < 1) throw std::invalid_argument("beam_size must be >= 1");
}

std::vector<VectorXd> HashingContextualEmbedder::embed(const std::vector<std::string>& tokens,
                                                       int /*predicate*/) const {
  const std::size_t m = tokens.size();
  std::vector<VectorXd> base(m, VectorXd::Zero(dim_));
  for (std::size_t i = 0; i < m; ++i) {
    const std::string padded = "^" + tokens[i] + "$";
    const std::size_t grams = padded.size() >= 3 ? padded.size() - 2 : 1;
    for (std::size_t k = 0; k < grams; ++k) {
      const std::uint64_t h = fnv1a(std::string_view(padded).substr(k, 3));
      base[i](static_cast<Eigen::Index>(h % static_cast<std::uint64_t>(dim_))) +=
          (h >> 63) != 0U ? 1.0 : -1.0;
    }
    const double n = base[i].norm();
    if (n > 0) base[i] /= n;
  }
  std::vector<VectorXd> out(m);
  for (std::size_t i = 0; i < m; ++i) {
    out[i] = base[i];
    if (i > 0) out[i] += 0.5 * base[i - 1];
    if (i + 1 < m) out[i] += 0.5 * base[i + 1];
  }
  return out;
}

Vocabulary::Vocabulary() : words_{std::string(kUnknown)} { index_.emplace(words_[0], 0); }

Vocabulary Vocabulary::build(std::span<const ParsedSentence> sentences, int min_count) {
  std::unordered_map<std::string, int> counts;
  std::vector<std::string> order;
  for (const auto& s : sentences) {
    for (const auto& t : s.tokens) {
      if (counts[t.surface]++ == 0) order.push_back(t.surface);
    }
  }
  Vocabulary v;
  for (const auto& w : order) {
    if (counts[w] >= min_count && !v.index_.count(w)) {
      v.index_.emplace(w, v.size());
      v.words_.push_back(w);
    }
  }
  return v;
}

Vocabulary Vocabulary::from_words(const std::vector<std::string>& words) {
  if (words.empty() || words.front() != kUnknown) {
    throw ParseError("vocabulary must start with the unknown-word entry");
  }
  Vocabulary v;
  for (std::size_t i = 1; i < words.size(); ++i) {
    if (!v.index_.emplace(words[i], v.size()).second) {
      throw ParseError("duplicate vocabulary entry '" + words[i] + "'");
    }
    v.words_.push_back(words[i]);
  }
  return v;
}

int Vocabulary::id(const std::string& word) const {
  auto it = index_.find(word);
  return it == index_.end() ? 0 : it->second;
}

double TokenDistributions::prob(int position, const Label& label) const {
  return probs(position - 1, static_cast<Eigen::Index>(labels.require_id(label)));
}

TaggerModel::TaggerModel(TaggerConfig config, Vocabulary vocab, ParameterSet params,
                         std::shared_ptr<const ContextualEmbedder> contextual)
    : config_(std::move(config)),
      vocab_(std::move(vocab)),
      params_(std::move(params)),
      contextual_(std::move(contextual)) {}

TaggerModel TaggerModel::init(const TaggerConfig& config, Vocabulary vocab,
                              std::shared_ptr<const ContextualEmbedder> contextual) {
  config.validate();
  if (config.embedder_kind == EmbedderKind::kExternalContextual) {
    if (!contextual) throw std::invalid_argument("external-contextual embedder requires a provider");
    if (contextual->dim() != config.embedding_dim) {
      throw std::invalid_argument("contextual embedder width differs from embedding_dim");
    }
  }
  ParameterSet p;
  for (const auto& shape : parameter_layout(config, vocab.size())) {
    p.add(shape.name, shape.rows, shape.cols);
  }

  std::mt19937_64 rng(config.rng_seed);
  std::uniform_real_distribution<double> uniform(-0.1, 0.1);
  for (auto& param : p.entries()) {
    for (Eigen::Index j = 0; j < param.value.cols(); ++j) {
      for (Eigen::Index i = 0; i < param.value.rows(); ++i) param.value(i, j) = uniform(rng);
    }
  }
  return TaggerModel(config, std::move(vocab), std::move(p), std::move(contextual));
}

void TaggerModel::set_contextual_embedder(std::shared_ptr<const ContextualEmbedder> contextual) {
  contextual_ = std::move(contextual);
}

std::vector<VectorXd> TaggerModel::embed(const ParsedSentence& sentence, int predicate) const {
  const int m = sentence.size();
  if (predicate < 1 || predicate > m) throw std::out_of_range("predicate index out of range");
  const int E = config_.embedding_dim;
  const int K = config_.indicator_dim;
  std::vector<VectorXd> words;
  if (config_.embedder_kind == EmbedderKind::kExternalContextual) {
    if (!contextual_) throw std::logic_error("no contextual embedder attached to the model");
    words = contextual_->embed(sentence.surfaces(), predicate);
    if (static_cast<int>(words.size()) != m) {
      throw std::logic_error("contextual embedder returned the wrong number of vectors");
    }
  } else {
    const MatrixXd& table = params_["embed.words"];
    words.reserve(m);
    for (const auto& t : sentence.tokens) words.push_back(table.row(vocab_.id(t.surface)).transpose());
  }
  const MatrixXd& indicator = params_["embed.indicator"];
  std::vector<VectorXd> out(m);
  for (int i = 0; i < m; ++i) {
    out[i].resize(E + K);
    out[i].head(E) = words[i];
    if (config_.use_predicate_indicator) {
      out[i].tail(K) = indicator.row(i + 1 == predicate ? 1 : 0).transpose();
    } else {
      out[i].tail(K).setZero();
    }
  }
  return out;
}

std::vector<VectorXd> TaggerModel::encode(const std::vector<VectorXd>& embeddings) const {
  if (embeddings.empty()) throw std::invalid_argument("cannot encode an empty sequence");
  std::vector<ForwardPass::Layer> layers;
  return encode_layers(embeddings, layers);
}

std::vector<VectorXd> TaggerModel::encode_layers(std::vector<VectorXd> current,
                                                 std::vector<ForwardPass::Layer>& layers) const {
  const int H = config_.hidden_dim;
  const int m = static_cast<int>(current.size());
  layers.resize(config_.num_encoder_layers);
  for (int l = 0; l < config_.num_encoder_layers; ++l) {
    ForwardPass::Layer& layer = layers[l];
    std::vector<VectorXd> hf;
    std::vector<VectorXd> hb;
    lstm_forward(params_[layer_name(l, "fwd") + ".W"], params_[layer_name(l, "fwd") + ".b"],
                 current, false, H, layer.forward, hf);
    lstm_forward(params_[layer_name(l, "bwd") + ".W"], params_[layer_name(l, "bwd") + ".b"],
                 current, true, H, layer.backward, hb);
    layer.lstm_out.resize(m);
    layer.output.resize(m);
    if (l > 0) layer.gate.resize(m);
    for (int t = 0; t < m; ++t) {
      layer.lstm_out[t].resize(2 * H);
      layer.lstm_out[t] << hf[t], hb[t];
      if (l == 0) {
        layer.output[t] = layer.lstm_out[t];
      } else {
        layer.gate[t] = sigmoid(params_[layer_name(l, "highway.W")] * current[t] +
                                params_[layer_name(l, "highway.b")].col(0));
        layer.output[t] = layer.gate[t].cwiseProduct(layer.lstm_out[t]) +
                          (VectorXd::Ones(2 * H) - layer.gate[t]).cwiseProduct(current[t]);
      }
    }
    layer.input = std::move(current);
    current = layer.output;
  }
  return current;
}

VectorXd label_distribution(const VectorXd& hidden, const MatrixXd& weights, const VectorXd& bias) {
  return softmax(weights * hidden + bias);
}

VectorXd TaggerModel::label_distribution(const VectorXd& hidden) const {
  return weakoie::label_distribution(hidden, params_["classifier.W"],
                                     params_["classifier.b"].col(0));
}

ForwardPass TaggerModel::run(const ParsedSentence& sentence, int predicate, bool keep) const {
  ForwardPass pass;
  pass.predicate = predicate;
  if (config_.embedder_kind == EmbedderKind::kStaticLookup) {
    for (const auto& t : sentence.tokens) pass.word_ids.push_back(vocab_.id(t.surface));
  }
  const std::vector<VectorXd> current = encode_layers(embed(sentence, predicate), pass.layers);
  const int m = static_cast<int>(current.size());
  const MatrixXd& Wc = params_["classifier.W"];
  const VectorXd bc = params_["classifier.b"].col(0);
  pass.logits.resize(m, Wc.rows());
  pass.distributions.labels = config_.label_set;
  pass.distributions.probs.resize(m, Wc.rows());
  for (int t = 0; t < m; ++t) {
    const VectorXd logits = Wc * current[t] + bc;
    pass.logits.row(t) = logits.transpose();
    pass.distributions.probs.row(t) = softmax(logits).transpose();
  }
  if (!keep) pass.layers.clear();
  return pass;
}

ForwardPass TaggerModel::forward(const ParsedSentence& sentence, int predicate) const {
  return run(sentence, predicate, true);
}

TokenDistributions TaggerModel::distributions(const ParsedSentence& sentence, int predicate) const {
  return run(sentence, predicate, false).distributions;
}

void TaggerModel::backward(const ForwardPass& pass, const MatrixXd& dlogits,
                           ParameterSet& grads) const {
  const int H = config_.hidden_dim;
  const int m = static_cast<int>(pass.logits.rows());
  if (dlogits.rows() != m || dlogits.cols() != pass.logits.cols()) {
    throw std::invalid_argument("dlogits shape mismatch");
  }
  if (pass.layers.empty()) throw std::invalid_argument("forward pass was not kept for backward");
  const MatrixXd& Wc = params_["classifier.W"];
  const ForwardPass::Layer& top = pass.layers.back();
  MatrixXd& dWc = grads["classifier.W"];
  MatrixXd& dbc = grads["classifier.b"];
  std::vector<VectorXd> dout(m);
  for (int t = 0; t < m; ++t) {
    const VectorXd dl = dlogits.row(t).transpose();
    dWc.noalias() += dl * top.output[t].transpose();
    dbc.col(0) += dl;
    dout[t] = Wc.transpose() * dl;
  }
  for (int l = config_.num_encoder_layers - 1; l >= 0; --l) {
    const ForwardPass::Layer& layer = pass.layers[l];
    const Eigen::Index D = layer.input.front().size();
    std::vector<VectorXd> dinput(m, VectorXd::Zero(D));
    std::vector<VectorXd> dlstm(m);
    if (l == 0) {
      dlstm = dout;
    } else {
      const MatrixXd& Wg = params_[layer_name(l, "highway.W")];
      MatrixXd& dWg = grads[layer_name(l, "highway.W")];
      MatrixXd& dbg = grads[layer_name(l, "highway.b")];
      for (int t = 0; t < m; ++t) {
        const VectorXd& g = layer.gate[t];
        dlstm[t] = dout[t].cwiseProduct(g);
        dinput[t] += dout[t].cwiseProduct(VectorXd::Ones(2 * H) - g);
        const VectorXd dz = dout[t]
                                .cwiseProduct(layer.lstm_out[t] - layer.input[t])
                                .cwiseProduct(g)
                                .cwiseProduct(VectorXd::Ones(2 * H) - g);
        dWg.noalias() += dz * layer.input[t].transpose();
        dbg.col(0) += dz;
        dinput[t] += Wg.transpose() * dz;
      }
    }
    std::vector<VectorXd> dhf(m);
    std::vector<VectorXd> dhb(m);
    for (int t = 0; t < m; ++t) {
      dhf[t] = dlstm[t].head(H);
      dhb[t] = dlstm[t].tail(H);
    }
    lstm_backward(params_[layer_name(l, "fwd") + ".W"], layer.forward, false, H, dhf,
                  grads[layer_name(l, "fwd") + ".W"], grads[layer_name(l, "fwd") + ".b"], dinput);
    lstm_backward(params_[layer_name(l, "bwd") + ".W"], layer.backward, true, H, dhb,
                  grads[layer_name(l, "bwd") + ".W"], grads[layer_name(l, "bwd") + ".b"], dinput);
    dout = std::move(dinput);
  }
  const int E = config_.embedding_dim;
  const int K = config_.indicator_dim;
  MatrixXd& dind = grads["embed.indicator"];
  for (int t = 0; t < m; ++t) {
    if (config_.embedder_kind == EmbedderKind::kStaticLookup) {
      grads["embed.words"].row(pass.word_ids[t]) += dout[t].head(E).transpose();
    }
    if (config_.use_predicate_indicator) {
      dind.row(t + 1 == pass.predicate ? 1 : 0) += dout[t].tail(K).transpose();
    }
  }
}

void TaggerModel::save(const std::filesystem::path& path) const {
  json manifest = json::array();
  for (const auto& p : params_.entries()) {
    manifest.push_back({{"name", p.name}, {"rows", p.value.rows()}, {"cols", p.value.cols()}});
  }
  const json header = {{"format", "weakoie-tagger"},
                       {"config", config_to_json(config_)},
                       {"vocabulary", vocab_.words()},
                       {"parameters", manifest}};
  const std::string text = header.dump();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IOError("cannot write checkpoint " + path.string());
  out.write(kMagic, sizeof(kMagic));
  const std::uint32_t version = kFormatVersion;
  out.write(reinterpret_cast<const char*>(&version), sizeof(version));
  const std::uint64_t len = text.size();
  out.write(reinterpret_cast<const char*>(&len), sizeof(len));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& p : params_.entries()) {
    // Column-major, as stored by Eigen.
    out.write(reinterpret_cast<const char*>(p.value.data()),
              static_cast<std::streamsize>(p.value.size() * sizeof(double)));
  }
  out.flush();
  if (!out) throw IOError("failed writing checkpoint " + path.string());
}

TaggerModel TaggerModel::load(const std::filesystem::path& path,
                              std::shared_ptr<const ContextualEmbedder> contextual) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IOError("cannot open checkpoint " + path.string());
  char magic[sizeof(kMagic)];
  std::uint32_t version = 0;
  std::uint64_t len = 0;
  in.read(magic, sizeof(magic));
  in.read(reinterpret_cast<char*>(&version), sizeof(version));
  in.read(reinterpret_cast<char*>(&len), sizeof(len));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw ParseError("not a tagger checkpoint: " + path.string());
  }
  if (version != kFormatVersion) throw ParseError("unsupported checkpoint version");
  if (len > (1ULL << 32)) throw ParseError("corrupt checkpoint header");
  std::string text(len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(len));
  if (!in) throw ParseError("truncated checkpoint header");
  json header;
  try {
    header = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("corrupt checkpoint header: ") + e.what());
  }
  TaggerConfig config = config_from_json(header.at("config"));
  Vocabulary vocab = Vocabulary::from_words(header.at("vocabulary").get<std::vector<std::string>>());
  ParameterSet params;
  for (const auto& entry : header.at("parameters")) {
    MatrixXd& m = params.add(entry.at("name").get<std::string>(), entry.at("rows").get<Eigen::Index>(),
                             entry.at("cols").get<Eigen::Index>());
    in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
    if (!in) throw ParseError("truncated checkpoint parameters");
  }
  const auto layout = parameter_layout(config, vocab.size());
  const auto& loaded = params.entries();
  if (layout.size() != loaded.size()) throw ParseError("checkpoint parameter count mismatch");
  for (std::size_t i = 0; i < layout.size(); ++i) {
    if (layout[i].name != loaded[i].name || layout[i].rows != loaded[i].value.rows() ||
        layout[i].cols != loaded[i].value.cols()) {
      throw ParseError("checkpoint parameter layout mismatch at " + loaded[i].name);
    }
  }
  return TaggerModel(std::move(config), std::move(vocab), std::move(params), std::move(contextual));
}

bool transition_allowed(const std::optional<Label>& prev, const Label& next, int position,
                        int predicate) {
  switch (next.bio) {
    case Bio::kO:
      return true;
    case Bio::kBegin:
      return next.role != Role::kP || position == predicate;
    case Bio::kInside:
      return prev.has_value() && !prev->is_outside() && prev->role == next.role;
  }
  return false;
}

namespace {

struct Hypothesis {
  double score;
  std::vector<std::uint8_t> ids;
};

bool ranks_before(const Hypothesis& a, const Hypothesis& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.ids < b.ids;
}

void keep_best(std::vector<Hypothesis>& hyps, std::size_t k) {
  if (hyps.size() > k) {
    std::partial_sort(hyps.begin(), hyps.begin() + static_cast<std::ptrdiff_t>(k), hyps.end(),
                      ranks_before);
    hyps.resize(k);
  } else {
    std::sort(hyps.begin(), hyps.end(), ranks_before);
  }
}

}  // namespace

std::vector<TagSequence> beam_decode(const TokenDistributions& distributions, int beam_size,
                                     int predicate) {
  if (beam_size < 1) throw std::invalid_argument("beam_size must be >= 1");
  const int m = distributions.length();
  const auto& labels = distributions.labels.labels();
  const std::size_t L = labels.size();
  if (static_cast<std::size_t>(distributions.probs.cols()) != L) {
    throw std::invalid_argument("distribution width differs from label set");
  }
  if (L > 255) throw std::invalid_argument("label set too large");
  const auto k = static_cast<std::size_t>(beam_size);
  if (m == 0) return {TagSequence{{}, 0.0}};

  // One beam per last label: the constraints only look one label back, so
  // this keeps the k best completions exactly.
  std::vector<std::vector<Hypothesis>> states(L);
  for (std::size_t l = 0; l < L; ++l) {
    if (!transition_allowed(std::nullopt, labels[l], 1, predicate)) continue;
    states[l].push_back({std::log(distributions.probs(0, static_cast<Eigen::Index>(l))),
                         {static_cast<std::uint8_t>(l)}});
  }
  for (int pos = 2; pos <= m; ++pos) {
    std::vector<std::vector<Hypothesis>> next(L);
    for (std::size_t l = 0; l < L; ++l) {
      const double lp = std::log(distributions.probs(pos - 1, static_cast<Eigen::Index>(l)));
      for (std::size_t prev = 0; prev < L; ++prev) {
        if (states[prev].empty()) continue;
        if (!transition_allowed(labels[prev], labels[l], pos, predicate)) continue;
        for (const auto& h : states[prev]) {
          Hypothesis ext{h.score + lp, h.ids};
          ext.ids.push_back(static_cast<std::uint8_t>(l));
          next[l].push_back(std::move(ext));
        }
      }
      keep_best(next[l], k);
    }
    states = std::move(next);
  }
  std::vector<Hypothesis> all;
  for (auto& s : states) {
    for (auto& h : s) all.push_back(std::move(h));
  }
  keep_best(all, k);
  std::vector<TagSequence> out;
  out.reserve(all.size());
  for (const auto& h : all) {
    TagSequence t;
    t.labels.reserve(h.ids.size());
    for (auto id : h.ids) t.labels.push_back(labels[id]);
    t.log_prob = h.score;
    out.push_back(std::move(t));
  }
  return out;
}

double confidence_avg_log(const TagSequence& tags, const TokenDistributions& distributions) {
  const int m = distributions.length();
  if (static_cast<int>(tags.size()) != m) {
    throw std::invalid_argument("tag sequence length differs from distributions");
  }
  if (m == 0) return 0.0;
  double total = 0.0;
  for (int i = 0; i < m; ++i) total += std::log(distributions.prob(i + 1, tags.labels[i]));
  return total / m;
}

std::vector<Extraction> extract(const ParsedSentence& sentence, const TaggerModel& model,
                                const PatternTable& table, const ExtractOptions& options) {
  std::vector<Extraction> out;
  for (int p : identify_predicates(sentence, table)) {
    const TokenDistributions dist = model.distributions(sentence, p);
    const auto beams = beam_decode(dist, model.config().beam_size, p);
    if (beams.empty()) continue;
    Extraction e;
    try {
      e = spans_from_tags(beams.front(), p, sentence.sentence_id);
    } catch (const NoPredicateSpan&) {
      continue;
    }
    e.confidence = confidence_avg_log(beams.front(), dist);
    if (options.rescore) e.confidence = options.rescore(e, sentence);
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace weakoie
