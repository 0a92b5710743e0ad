#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "pprx/encode.hpp"
#include "pprx/errors.hpp"
#include "pprx/ppr.hpp"

namespace pprx {

inline constexpr int kNumClasses = 2;
inline constexpr int kLabelReal = 0;
inline constexpr int kLabelFake = 1;
inline constexpr int kModelFormatVersion = 1;
inline constexpr double kProbabilityFloor = 1e-12;

// Everything needed to turn raw text into the classifier's input.
struct PipelineConfig {
  double alpha = 0.85;
  int window_k = kDefaultWindow;
  int dim = 300;
  double tol = 1e-9;
  int max_iters = 1000;
  double push_tol = 1e-10;
  int push_max_iters = 2000;
  std::string embedding_source;
  std::uint64_t fallback_seed = 0;
  std::vector<std::string> label_names{"real", "fake"};

  PprConfig ppr() const { return PprConfig{alpha, tol, max_iters, push_tol, push_max_iters}; }
};

// Two-layer perceptron: logits = W2^T relu(W1^T x + b1) + b2.
struct Mlp {
  Eigen::MatrixXd w1;  // d x hidden
  Eigen::VectorXd b1;  // hidden
  Eigen::MatrixXd w2;  // hidden x 2
  Eigen::VectorXd b2;  // 2

  Eigen::Index input_dim() const noexcept { return w1.rows(); }
  Eigen::Index hidden() const noexcept { return w1.cols(); }

  static Mlp zeros_like(const Mlp& other) {
    return Mlp{Eigen::MatrixXd::Zero(other.w1.rows(), other.w1.cols()), Eigen::VectorXd::Zero(other.b1.size()),
               Eigen::MatrixXd::Zero(other.w2.rows(), other.w2.cols()), Eigen::VectorXd::Zero(other.b2.size())};
  }

  bool all_finite() const {
    return w1.allFinite() && b1.allFinite() && w2.allFinite() && b2.allFinite();
  }

  bool operator==(const Mlp& o) const {
    return w1 == o.w1 && b1 == o.b1 && w2 == o.w2 && b2 == o.b2;
  }
};

struct MlpModel {
  Mlp net;
  Standardizer standardizer;
  PipelineConfig pipeline;

  Eigen::Index input_dim() const noexcept { return net.input_dim(); }
};

struct Prediction {
  double p_real = 0.5;
  double p_fake = 0.5;

  double operator[](int cls) const { return cls == kLabelFake ? p_fake : p_real; }
  int argmax() const noexcept { return p_fake > p_real ? kLabelFake : kLabelReal; }
  bool operator==(const Prediction&) const = default;
};

struct TrainConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  int batch_size = 64;
  int epochs = 20;
  std::uint64_t rng_seed = 0;
  int hidden = 32;

  void validate() const {
    if (!(learning_rate > 0.0)) throw Error(ErrorKind::InvalidArgument, "learning rate must be positive");
    if (batch_size < 1) throw Error(ErrorKind::InvalidArgument, "batch size must be at least 1");
    if (epochs < 0) throw Error(ErrorKind::InvalidArgument, "epochs must be non-negative");
    if (hidden < 1) throw Error(ErrorKind::InvalidArgument, "hidden width must be positive");
  }
};

// Glorot-uniform weights from a seeded std::mt19937_64, zero biases.
inline Mlp init_mlp(int d, std::uint64_t seed, int hidden = 32) {
  if (d < 1 || hidden < 1) throw Error(ErrorKind::InvalidArgument, "layer sizes must be positive");
  std::mt19937_64 engine(seed);
  auto glorot = [&engine](Eigen::Index fan_in, Eigen::Index fan_out) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    Eigen::MatrixXd w(fan_in, fan_out);
    for (Eigen::Index r = 0; r < fan_in; ++r)
      for (Eigen::Index c = 0; c < fan_out; ++c) w(r, c) = dist(engine);
    return w;
  };
  Mlp net;
  net.w1 = glorot(d, hidden);
  net.b1 = Eigen::VectorXd::Zero(hidden);
  net.w2 = glorot(hidden, kNumClasses);
  net.b2 = Eigen::VectorXd::Zero(kNumClasses);
  return net;
}

inline Prediction softmax2(double logit_real, double logit_fake) {
  const double top = std::max(logit_real, logit_fake);
  const double e_real = std::exp(logit_real - top);
  const double e_fake = std::exp(logit_fake - top);
  const double total = e_real + e_fake;
  return Prediction{e_real / total, e_fake / total};
}

inline Prediction forward(const Mlp& net, const Eigen::VectorXd& x) {
  if (x.size() != net.input_dim())
    throw Error(ErrorKind::Shape, "input has " + std::to_string(x.size()) + " dims, model expects " +
                                      std::to_string(net.input_dim()));
  if (!x.allFinite()) throw Error(ErrorKind::Numerical, "non-finite classifier input");
  const Eigen::VectorXd hidden = (net.w1.transpose() * x + net.b1).cwiseMax(0.0);
  const Eigen::VectorXd logits = net.w2.transpose() * hidden + net.b2;
  return softmax2(logits[0], logits[1]);
}

inline Prediction forward(const MlpModel& model, const Eigen::VectorXd& x) { return forward(model.net, x); }

// Cross-entropy of one prediction; the probability is floored before the log.
inline double loss(const Prediction& pred, int label) {
  if (label != kLabelReal && label != kLabelFake) throw Error(ErrorKind::InvalidArgument, "label must be 0 or 1");
  return -std::log(std::max(pred[label], kProbabilityFloor));
}

// Mean cross-entropy over the rows of `inputs` (already standardized) and,
// if `grad` is non-null, its gradient with respect to every parameter.
inline double batch_loss(const Mlp& net, const Eigen::MatrixXd& inputs, std::span<const int> labels,
                         Mlp* grad = nullptr) {
  const Eigen::Index batch = inputs.rows();
  if (batch == 0 || static_cast<Eigen::Index>(labels.size()) != batch)
    throw Error(ErrorKind::Shape, "batch inputs and labels disagree");
  const Eigen::MatrixXd pre = (inputs * net.w1).rowwise() + net.b1.transpose();
  const Eigen::MatrixXd act = pre.cwiseMax(0.0);
  const Eigen::MatrixXd logits = (act * net.w2).rowwise() + net.b2.transpose();

  Eigen::MatrixXd dlogits(batch, kNumClasses);
  double total = 0.0;
  const double scale = 1.0 / static_cast<double>(batch);
  for (Eigen::Index b = 0; b < batch; ++b) {
    const Prediction z = softmax2(logits(b, 0), logits(b, 1));
    const int y = labels[static_cast<std::size_t>(b)];
    total += loss(z, y);
    dlogits(b, 0) = (z.p_real - (y == kLabelReal ? 1.0 : 0.0)) * scale;
    dlogits(b, 1) = (z.p_fake - (y == kLabelFake ? 1.0 : 0.0)) * scale;
  }
  if (grad) {
    grad->w2 = act.transpose() * dlogits;
    grad->b2 = dlogits.colwise().sum().transpose();
    const Eigen::MatrixXd dpre = ((dlogits * net.w2.transpose()).array() * (pre.array() > 0.0).cast<double>()).matrix();
    grad->w1 = inputs.transpose() * dpre;
    grad->b1 = dpre.colwise().sum().transpose();
  }
  return total * scale;
}

struct LabeledEmbedding {
  DocEmbedding embedding;
  int label = kLabelReal;
};

namespace detail {

struct AdamState {
  Mlp m;
  Mlp v;
  long long step = 0;
};

template <class Param>
void adam_update(Param& param, const Param& g, Param& m, Param& v, const TrainConfig& cfg, double bias1,
                 double bias2) {
  m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
  v = cfg.beta2 * v + (1.0 - cfg.beta2) * g.cwiseProduct(g);
  param.array() -= cfg.learning_rate * (m.array() / bias1) / ((v.array() / bias2).sqrt() + cfg.adam_epsilon);
}

}  // namespace detail

// Fits the standardizer on the training embeddings, then runs mini-batch Adam
// on mean cross-entropy. Shuffling and initialization both derive from
// cfg.rng_seed. `epoch_losses`, if given, receives the mean batch loss of
// every epoch.
inline MlpModel train(std::span<const LabeledEmbedding> data, const TrainConfig& cfg, PipelineConfig pipeline = {},
                      std::vector<double>* epoch_losses = nullptr) {
  cfg.validate();
  bool seen[kNumClasses] = {false, false};
  for (const auto& ex : data) {
    if (ex.label != kLabelReal && ex.label != kLabelFake) throw Error(ErrorKind::InvalidArgument, "bad label");
    seen[ex.label] = true;
  }
  if (!seen[kLabelReal] || !seen[kLabelFake])
    throw Error(ErrorKind::MissingClass, "training data must contain both real and fake examples");

  std::vector<DocEmbedding> embeddings;
  embeddings.reserve(data.size());
  for (const auto& ex : data) embeddings.push_back(ex.embedding);

  MlpModel model;
  model.standardizer = fit_standardizer(embeddings);
  const auto d = static_cast<int>(model.standardizer.dim());
  model.net = init_mlp(d, cfg.rng_seed, cfg.hidden);
  pipeline.dim = d;
  model.pipeline = std::move(pipeline);

  Eigen::MatrixXd inputs(static_cast<Eigen::Index>(data.size()), d);
  for (std::size_t i = 0; i < data.size(); ++i)
    inputs.row(static_cast<Eigen::Index>(i)) = model.standardizer.apply(data[i].embedding.u).transpose();

  std::mt19937_64 shuffler(cfg.rng_seed ^ 0x5DEECE66DULL);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  detail::AdamState adam{Mlp::zeros_like(model.net), Mlp::zeros_like(model.net), 0};
  Mlp grad = Mlp::zeros_like(model.net);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffler);
    double epoch_loss = 0.0;
    int batches = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      Eigen::MatrixXd batch(static_cast<Eigen::Index>(stop - start), d);
      std::vector<int> labels(stop - start);
      for (std::size_t k = start; k < stop; ++k) {
        batch.row(static_cast<Eigen::Index>(k - start)) = inputs.row(static_cast<Eigen::Index>(order[k]));
        labels[k - start] = data[order[k]].label;
      }
      epoch_loss += batch_loss(model.net, batch, labels, &grad);
      ++batches;

      ++adam.step;
      const double bias1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(adam.step));
      const double bias2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(adam.step));
      detail::adam_update(model.net.w1, grad.w1, adam.m.w1, adam.v.w1, cfg, bias1, bias2);
      detail::adam_update(model.net.b1, grad.b1, adam.m.b1, adam.v.b1, cfg, bias1, bias2);
      detail::adam_update(model.net.w2, grad.w2, adam.m.w2, adam.v.w2, cfg, bias1, bias2);
      detail::adam_update(model.net.b2, grad.b2, adam.m.b2, adam.v.b2, cfg, bias1, bias2);
    }
    if (epoch_losses) epoch_losses->push_back(epoch_loss / batches);
  }
  if (!model.net.all_finite()) throw Error(ErrorKind::Numerical, "training diverged to non-finite parameters");
  return model;
}

inline Prediction predict(const MlpModel& model, const DocEmbedding& e) {
  return forward(model.net, model.standardizer.apply(e.u));
}

// ---------------------------------------------------------------------------
// Model file (JSON, format_version 1)

namespace detail {

inline nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
  return nlohmann::json(std::vector<double>(v.data(), v.data() + v.size()));
}

inline nlohmann::json layer_to_json(const Eigen::MatrixXd& w, const Eigen::VectorXd& b) {
  std::vector<double> row_major;
  row_major.reserve(static_cast<std::size_t>(w.size()));
  for (Eigen::Index r = 0; r < w.rows(); ++r)
    for (Eigen::Index c = 0; c < w.cols(); ++c) row_major.push_back(w(r, c));
  return {{"rows", w.rows()}, {"cols", w.cols()}, {"weights", row_major}, {"bias", vector_to_json(b)}};
}

inline Eigen::VectorXd json_to_vector(const nlohmann::json& j, Eigen::Index expected, const char* what) {
  const auto values = j.get<std::vector<double>>();
  if (static_cast<Eigen::Index>(values.size()) != expected)
    throw Error(ErrorKind::ModelFormat, std::string(what) + " has " + std::to_string(values.size()) +
                                            " entries, expected " + std::to_string(expected));
  Eigen::VectorXd v(expected);
  for (Eigen::Index i = 0; i < expected; ++i) v[i] = values[static_cast<std::size_t>(i)];
  if (!v.allFinite()) throw Error(ErrorKind::ModelFormat, std::string(what) + " contains non-finite values");
  return v;
}

inline void json_to_layer(const nlohmann::json& j, Eigen::MatrixXd& w, Eigen::VectorXd& b) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  if (rows < 1 || cols < 1) throw Error(ErrorKind::ModelFormat, "layer dimensions must be positive");
  const Eigen::VectorXd flat = json_to_vector(j.at("weights"), rows * cols, "layer weights");
  w.resize(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) w(r, c) = flat[r * cols + c];
  b = json_to_vector(j.at("bias"), cols, "layer bias");
}

}  // namespace detail

inline nlohmann::json pipeline_to_json(const PipelineConfig& p) {
  return {{"alpha", p.alpha},
          {"window_k", p.window_k},
          {"dim", p.dim},
          {"tol", p.tol},
          {"max_iters", p.max_iters},
          {"push_tol", p.push_tol},
          {"push_max_iters", p.push_max_iters},
          {"embedding_source", p.embedding_source},
          {"fallback_seed", p.fallback_seed},
          {"label_names", p.label_names}};
}

inline std::string serialize_model(const MlpModel& model) {
  nlohmann::json doc;
  doc["format_version"] = kModelFormatVersion;
  doc["pipeline_config"] = pipeline_to_json(model.pipeline);
  doc["standardizer"] = {{"mu", detail::vector_to_json(model.standardizer.mu)},
                         {"sigma", detail::vector_to_json(model.standardizer.sigma)},
                         {"epsilon", model.standardizer.epsilon}};
  doc["layers"] = nlohmann::json::array(
      {detail::layer_to_json(model.net.w1, model.net.b1), detail::layer_to_json(model.net.w2, model.net.b2)});
  doc["label_names"] = model.pipeline.label_names;
  return doc.dump(2) + "\n";
}

inline MlpModel parse_model(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ModelFormat, std::string("not a valid model document: ") + e.what());
  }
  try {
    if (!doc.is_object() || !doc.contains("format_version"))
      throw Error(ErrorKind::ModelFormat, "missing format_version");
    const int version = doc.at("format_version").get<int>();
    if (version != kModelFormatVersion)
      throw Error(ErrorKind::ModelFormat, "unsupported format_version " + std::to_string(version) +
                                              " (supported: " + std::to_string(kModelFormatVersion) + ")");
    MlpModel model;
    const auto& pc = doc.at("pipeline_config");
    auto& p = model.pipeline;
    p.alpha = pc.at("alpha").get<double>();
    p.window_k = pc.at("window_k").get<int>();
    p.dim = pc.at("dim").get<int>();
    p.tol = pc.at("tol").get<double>();
    p.max_iters = pc.at("max_iters").get<int>();
    p.push_tol = pc.at("push_tol").get<double>();
    p.push_max_iters = pc.at("push_max_iters").get<int>();
    p.embedding_source = pc.at("embedding_source").get<std::string>();
    p.fallback_seed = pc.at("fallback_seed").get<std::uint64_t>();
    p.label_names = doc.at("label_names").get<std::vector<std::string>>();
    if (p.label_names.size() != kNumClasses) throw Error(ErrorKind::ModelFormat, "expected two label names");
    p.ppr().validate();

    const auto& layers = doc.at("layers");
    if (!layers.is_array() || layers.size() != 2) throw Error(ErrorKind::ModelFormat, "expected exactly two layers");
    detail::json_to_layer(layers[0], model.net.w1, model.net.b1);
    detail::json_to_layer(layers[1], model.net.w2, model.net.b2);
    if (model.net.w2.rows() != model.net.w1.cols() || model.net.w2.cols() != kNumClasses)
      throw Error(ErrorKind::ModelFormat, "layer shapes do not chain into two outputs");
    if (model.net.input_dim() != p.dim) throw Error(ErrorKind::ModelFormat, "input layer does not match dim");

    const auto& st = doc.at("standardizer");
    model.standardizer.mu = detail::json_to_vector(st.at("mu"), p.dim, "standardizer mu");
    model.standardizer.sigma = detail::json_to_vector(st.at("sigma"), p.dim, "standardizer sigma");
    model.standardizer.epsilon = st.at("epsilon").get<double>();
    if (!(model.standardizer.epsilon > 0.0) || (model.standardizer.sigma.array() < 0.0).any())
      throw Error(ErrorKind::ModelFormat, "invalid standardizer");
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ModelFormat, std::string("schema violation: ") + e.what());
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::ModelFormat) throw;
    throw Error(ErrorKind::ModelFormat, e.what());
  }
}

inline void save_model(const MlpModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write model file '" + path + "'");
  out << serialize_model(model);
  if (!out) throw Error(ErrorKind::Io, "failed writing model file '" + path + "'");
}

inline MlpModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open model file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_model(buf.str());
}

}  // namespace pprx
