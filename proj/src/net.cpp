#include "refsem/net.hpp"

#include <cmath>

#include <json.hpp>

#include "refsem/io.hpp"
#include "refsem/serde.hpp"

namespace refsem::net {

namespace {

constexpr std::string_view kCheckpointMagic = "RSCK";

Eigen::ArrayXd sigmoid(const Eigen::ArrayXd& x) {
  return 1.0 / (1.0 + (-x).exp());
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// Binary cross-entropy from the logit, stable for any finite s.
double bce_from_logit(double s, double target) {
  return std::max(s, 0.0) - target * s + std::log1p(std::exp(-std::abs(s)));
}

VectorXd input_vector(const scene::Object& obj, bool target_bit,
                      const scene::Schema& schema) {
  VectorXd x = VectorXd::Zero(schema.feature_dim() + 1);
  for (int a = 0; a < schema.attribute_count(); ++a) {
    x[schema.feature_offset(a) + obj.values[a]] = 1.0;
  }
  x[schema.feature_dim()] = target_bit ? 1.0 : 0.0;
  return x;
}

// Decoder inputs for a whole world, one column per object: [f; features].
MatrixXd decoder_inputs(const MessageVector& f, const scene::World& world,
                        const scene::Schema& schema) {
  const auto hidden = f.size();
  MatrixXd inputs = MatrixXd::Zero(hidden + schema.feature_dim(), world.size());
  for (int j = 0; j < world.size(); ++j) {
    inputs.col(j).head(hidden) = f;
    const scene::Object& obj = world.objects[j];
    for (int a = 0; a < schema.attribute_count(); ++a) {
      inputs(hidden + schema.feature_offset(a) + obj.values[a], j) = 1.0;
    }
  }
  return inputs;
}

// Everything the backward pass needs from one encoder run.
struct EncodeTrace {
  std::vector<VectorXd> inputs;      // x_t
  std::vector<VectorXd> states;      // h_0 .. h_T
  std::vector<Eigen::ArrayXd> update;  // z_t
  std::vector<Eigen::ArrayXd> reset;   // r_t
  std::vector<Eigen::ArrayXd> cand;    // tanh candidate
  std::vector<VectorXd> gated;         // r_t .* h_{t-1}
};

VectorXd encode_traced(const ModelParams& params, const scene::Scene& scene,
                       const scene::Schema& schema, EncodeTrace* trace) {
  const GruParams& enc = params.encoder;
  const auto hidden = enc.b_update.size();
  VectorXd h = VectorXd::Zero(hidden);
  for (std::size_t t = 0; t < scene.world.objects.size(); ++t) {
    VectorXd x = input_vector(scene.world.objects[t], scene.target[t], schema);
    Eigen::ArrayXd z =
        sigmoid((enc.w_update * x + enc.u_update * h + enc.b_update).array());
    Eigen::ArrayXd r =
        sigmoid((enc.w_reset * x + enc.u_reset * h + enc.b_reset).array());
    VectorXd gated = (r * h.array()).matrix();
    Eigen::ArrayXd c =
        (enc.w_cand * x + enc.u_cand * gated + enc.b_cand).array().tanh();
    VectorXd next = ((1.0 - z) * h.array() + z * c).matrix();
    if (trace != nullptr) {
      trace->inputs.push_back(std::move(x));
      trace->states.push_back(h);
      trace->update.push_back(std::move(z));
      trace->reset.push_back(std::move(r));
      trace->cand.push_back(std::move(c));
      trace->gated.push_back(std::move(gated));
    }
    h = std::move(next);
  }
  if (trace != nullptr) trace->states.push_back(h);
  return h;
}

void check_dims(const ModelParams& params, const scene::Schema& schema) {
  const auto input = params.encoder.w_update.cols();
  if (input != schema.feature_dim() + 1) {
    throw ArgumentError("encoder input size " + std::to_string(input) +
                        " does not match schema feature dim + 1");
  }
  const auto hidden = params.encoder.b_update.size();
  if (params.decoder.w1.cols() != hidden + schema.feature_dim()) {
    throw ArgumentError("decoder input size does not match message + features");
  }
}

}  // namespace

void ModelConfig::validate() const {
  if (hidden_dim < 1) throw ConfigError("hidden_dim must be >= 1");
  if (feature_dim < 1) throw ConfigError("feature_dim must be >= 1");
  if (decoder_hidden < 1) throw ConfigError("decoder_hidden must be >= 1");
  if (learning_rate <= 0) throw ConfigError("learning_rate must be positive");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (train_steps < 0) throw ConfigError("train_steps must be >= 0");
  if (adam_beta1 <= 0 || adam_beta1 >= 1 || adam_beta2 <= 0 || adam_beta2 >= 1) {
    throw ConfigError("adam betas must lie in (0, 1)");
  }
  if (adam_epsilon <= 0) throw ConfigError("adam_epsilon must be positive");
}

std::vector<TensorRef> tensor_refs(ModelParams& params) {
  GruParams& e = params.encoder;
  DecoderParams& d = params.decoder;
  auto ref = [](const char* name, auto& m) {
    return TensorRef{name, m.data(), m.rows(), m.cols()};
  };
  return {ref("enc.w_update", e.w_update), ref("enc.u_update", e.u_update),
          ref("enc.b_update", e.b_update), ref("enc.w_reset", e.w_reset),
          ref("enc.u_reset", e.u_reset),   ref("enc.b_reset", e.b_reset),
          ref("enc.w_cand", e.w_cand),     ref("enc.u_cand", e.u_cand),
          ref("enc.b_cand", e.b_cand),     ref("dec.w1", d.w1),
          ref("dec.b1", d.b1),             ref("dec.w2", d.w2),
          ref("dec.b2", d.b2)};
}

ModelParams zero_params(const ModelConfig& config) {
  config.validate();
  const int h = config.hidden_dim;
  const int in = config.feature_dim + 1;
  const int d = config.decoder_hidden;
  ModelParams params;
  GruParams& e = params.encoder;
  for (MatrixXd* w : {&e.w_update, &e.w_reset, &e.w_cand}) {
    *w = MatrixXd::Zero(h, in);
  }
  for (MatrixXd* u : {&e.u_update, &e.u_reset, &e.u_cand}) {
    *u = MatrixXd::Zero(h, h);
  }
  for (VectorXd* b : {&e.b_update, &e.b_reset, &e.b_cand}) {
    *b = VectorXd::Zero(h);
  }
  params.decoder.w1 = MatrixXd::Zero(d, h + config.feature_dim);
  params.decoder.b1 = VectorXd::Zero(d);
  params.decoder.w2 = VectorXd::Zero(d);
  params.decoder.b2 = VectorXd::Zero(1);
  return params;
}

ModelParams init_params(const ModelConfig& config) {
  ModelParams params = zero_params(config);
  Rng rng(config.seed);
  for (TensorRef& t : tensor_refs(params)) {
    for (Eigen::Index i = 0; i < t.count(); ++i) {
      t.data[i] = rng.uniform_real(-0.1, 0.1);
    }
  }
  return params;
}

MessageVector encode(const ModelParams& params, const scene::Scene& scene,
                     const scene::Schema& schema) {
  check_dims(params, schema);
  scene::validate(scene, schema);
  return encode_traced(params, scene, schema, nullptr);
}

double decode(const ModelParams& params, const MessageVector& f,
              const VectorXd& object_features) {
  const DecoderParams& dec = params.decoder;
  if (f.size() + object_features.size() != dec.w1.cols()) {
    throw ArgumentError("decoder input size mismatch");
  }
  VectorXd input(dec.w1.cols());
  input << f, object_features;
  const VectorXd hidden = (dec.w1 * input + dec.b1).cwiseMax(0.0);
  return sigmoid(dec.w2.dot(hidden) + dec.b2[0]);
}

VectorXd decode_world(const ModelParams& params, const MessageVector& f,
                      const scene::World& world, const scene::Schema& schema) {
  const DecoderParams& dec = params.decoder;
  if (f.size() + schema.feature_dim() != dec.w1.cols()) {
    throw ArgumentError("decoder input size mismatch");
  }
  const MatrixXd inputs = decoder_inputs(f, world, schema);
  const MatrixXd hidden =
      ((dec.w1 * inputs).colwise() + dec.b1).cwiseMax(0.0);
  const VectorXd logits =
      (hidden.transpose() * dec.w2).array() + dec.b2[0];
  return sigmoid(logits.array()).matrix();
}

double loss(const ModelParams& params, const std::vector<scene::Scene>& batch,
            const scene::Schema& schema) {
  if (batch.empty()) throw ArgumentError("loss over an empty batch");
  check_dims(params, schema);
  const DecoderParams& dec = params.decoder;
  double total = 0.0;
  std::int64_t objects = 0;
  for (const scene::Scene& s : batch) {
    const MessageVector f = encode_traced(params, s, schema, nullptr);
    const MatrixXd inputs = decoder_inputs(f, s.world, schema);
    const MatrixXd hidden =
        ((dec.w1 * inputs).colwise() + dec.b1).cwiseMax(0.0);
    const VectorXd logits =
        (hidden.transpose() * dec.w2).array() + dec.b2[0];
    for (int j = 0; j < s.world.size(); ++j) {
      total += bce_from_logit(logits[j], s.target[j] ? 1.0 : 0.0);
    }
    objects += s.world.size();
  }
  return total / static_cast<double>(objects);
}

std::pair<double, ModelParams> loss_and_grad(
    const ModelParams& params, const std::vector<scene::Scene>& batch,
    const scene::Schema& schema) {
  if (batch.empty()) throw ArgumentError("gradient over an empty batch");
  check_dims(params, schema);
  const GruParams& enc = params.encoder;
  const DecoderParams& dec = params.decoder;
  const auto hidden_dim = enc.b_update.size();

  ModelConfig shape;
  shape.hidden_dim = static_cast<int>(hidden_dim);
  shape.feature_dim = schema.feature_dim();
  shape.decoder_hidden = static_cast<int>(dec.b1.size());
  ModelParams grads = zero_params(shape);
  GruParams& ge = grads.encoder;
  DecoderParams& gd = grads.decoder;

  double total = 0.0;
  std::int64_t objects = 0;

  for (const scene::Scene& s : batch) {
    EncodeTrace trace;
    const MessageVector f = encode_traced(params, s, schema, &trace);
    const int m = s.world.size();
    objects += m;

    // Decoder forward, one column per object.
    const MatrixXd inputs = decoder_inputs(f, s.world, schema);
    const MatrixXd pre = (dec.w1 * inputs).colwise() + dec.b1;
    const MatrixXd act = pre.cwiseMax(0.0);
    const VectorXd logits = (act.transpose() * dec.w2).array() + dec.b2[0];

    VectorXd dlogits(m);
    for (int j = 0; j < m; ++j) {
      const double target = s.target[j] ? 1.0 : 0.0;
      total += bce_from_logit(logits[j], target);
      dlogits[j] = sigmoid(logits[j]) - target;
    }

    // Decoder backward.
    gd.w2.noalias() += act * dlogits;
    gd.b2[0] += dlogits.sum();
    const MatrixXd dact = dec.w2 * dlogits.transpose();
    const MatrixXd dpre =
        (pre.array() > 0.0).select(dact, MatrixXd::Zero(dact.rows(), m));
    gd.w1.noalias() += dpre * inputs.transpose();
    gd.b1.noalias() += dpre.rowwise().sum();
    VectorXd dh =
        (dec.w1.topRows(hidden_dim).transpose() * dpre).rowwise().sum();

    // Backpropagation through time.
    for (int t = m - 1; t >= 0; --t) {
      const VectorXd& h_prev = trace.states[t];
      const Eigen::ArrayXd& z = trace.update[t];
      const Eigen::ArrayXd& r = trace.reset[t];
      const Eigen::ArrayXd& c = trace.cand[t];
      const VectorXd& x = trace.inputs[t];

      const Eigen::ArrayXd dc = dh.array() * z;
      const Eigen::ArrayXd dz = dh.array() * (c - h_prev.array());
      VectorXd dh_prev = (dh.array() * (1.0 - z)).matrix();

      const VectorXd d_cand = (dc * (1.0 - c.square())).matrix();
      ge.w_cand.noalias() += d_cand * x.transpose();
      ge.u_cand.noalias() += d_cand * trace.gated[t].transpose();
      ge.b_cand.noalias() += d_cand;
      const VectorXd d_gated = enc.u_cand.transpose() * d_cand;
      const Eigen::ArrayXd dr = d_gated.array() * h_prev.array();
      dh_prev.array() += d_gated.array() * r;

      const VectorXd d_update = (dz * z * (1.0 - z)).matrix();
      ge.w_update.noalias() += d_update * x.transpose();
      ge.u_update.noalias() += d_update * h_prev.transpose();
      ge.b_update.noalias() += d_update;
      dh_prev.noalias() += enc.u_update.transpose() * d_update;

      const VectorXd d_reset = (dr * r * (1.0 - r)).matrix();
      ge.w_reset.noalias() += d_reset * x.transpose();
      ge.u_reset.noalias() += d_reset * h_prev.transpose();
      ge.b_reset.noalias() += d_reset;
      dh_prev.noalias() += enc.u_reset.transpose() * d_reset;

      dh = std::move(dh_prev);
    }
  }

  const double scale = 1.0 / static_cast<double>(objects);
  for (TensorRef& t : tensor_refs(grads)) {
    Eigen::Map<VectorXd>(t.data, t.count()) *= scale;
  }
  return {total * scale, std::move(grads)};
}

ModelParams grad(const ModelParams& params,
                 const std::vector<scene::Scene>& batch,
                 const scene::Schema& schema) {
  return loss_and_grad(params, batch, schema).second;
}

ModelParams train(const ModelConfig& config, const scene::Schema& schema,
                  const SceneSource& source,
                  const std::function<void(int step, double loss)>& on_step) {
  config.validate();
  if (config.feature_dim != schema.feature_dim()) {
    throw ConfigError("config feature_dim does not match schema");
  }
  ModelParams params = init_params(config);
  ModelParams first = zero_params(config);
  ModelParams second = zero_params(config);
  auto p_refs = tensor_refs(params);
  auto m_refs = tensor_refs(first);
  auto v_refs = tensor_refs(second);

  std::uint64_t next_scene = 0;
  std::vector<scene::Scene> batch;
  batch.reserve(config.batch_size);
  for (int step = 0; step < config.train_steps; ++step) {
    batch.clear();
    for (int i = 0; i < config.batch_size; ++i) {
      batch.push_back(source(next_scene++));
    }
    auto [value, grads] = loss_and_grad(params, batch, schema);
    if (!std::isfinite(value)) {
      throw TrainingError("training loss is not finite", step);
    }
    if (on_step) on_step(step, value);

    const auto g_refs = tensor_refs(grads);
    const double t = static_cast<double>(step + 1);
    const double m_corr = 1.0 / (1.0 - std::pow(config.adam_beta1, t));
    const double v_corr = 1.0 / (1.0 - std::pow(config.adam_beta2, t));
    for (std::size_t k = 0; k < p_refs.size(); ++k) {
      auto p = Eigen::Map<Eigen::ArrayXd>(p_refs[k].data, p_refs[k].count());
      auto g = Eigen::Map<const Eigen::ArrayXd>(g_refs[k].data, g_refs[k].count());
      auto m = Eigen::Map<Eigen::ArrayXd>(m_refs[k].data, m_refs[k].count());
      auto v = Eigen::Map<Eigen::ArrayXd>(v_refs[k].data, v_refs[k].count());
      m = config.adam_beta1 * m + (1.0 - config.adam_beta1) * g;
      v = config.adam_beta2 * v + (1.0 - config.adam_beta2) * g.square();
      p -= config.learning_rate * (m * m_corr) /
           ((v * v_corr).sqrt() + config.adam_epsilon);
    }
  }
  return params;
}

double object_accuracy(const ModelParams& params,
                       const std::vector<scene::Scene>& scenes,
                       const scene::Schema& schema) {
  if (scenes.empty()) throw ArgumentError("accuracy over an empty scene list");
  std::int64_t correct = 0;
  std::int64_t total = 0;
  for (const scene::Scene& s : scenes) {
    const MessageVector f = encode(params, s, schema);
    const VectorXd probs = decode_world(params, f, s.world, schema);
    for (int j = 0; j < s.world.size(); ++j) {
      correct += ((probs[j] > 0.5) == bool(s.target[j])) ? 1 : 0;
    }
    total += s.world.size();
  }
  return static_cast<double>(correct) / static_cast<double>(total);
}

void save_checkpoint(const ModelParams& params, const ModelConfig& config,
                     const std::string& path) {
  config.validate();
  std::vector<io::NamedTensor> tensors;
  for (TensorRef& t : tensor_refs(const_cast<ModelParams&>(params))) {
    io::NamedTensor out;
    out.name = t.name;
    out.data = Eigen::Map<const MatrixXd>(t.data, t.rows, t.cols);
    tensors.push_back(std::move(out));
  }
  io::write_archive(path, kCheckpointMagic,
                    serde::model_config_to_json(config).dump(), tensors);
}

std::pair<ModelParams, ModelConfig> load_checkpoint(const std::string& path) {
  const io::Archive archive = io::read_archive(path, kCheckpointMagic);
  ModelConfig config;
  try {
    config = serde::model_config_from_json(nlohmann::json::parse(archive.meta_json));
    config.validate();
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError("'" + path + "' has a corrupt config header: " +
                          e.what());
  }
  ModelParams params = zero_params(config);
  for (TensorRef& t : tensor_refs(params)) {
    const MatrixXd& stored = archive.tensor(t.name);
    if (stored.rows() != t.rows || stored.cols() != t.cols) {
      throw CheckpointError("tensor '" + t.name + "' in '" + path +
                            "' has the wrong shape");
    }
    Eigen::Map<MatrixXd>(t.data, t.rows, t.cols) = stored;
  }
  return {std::move(params), config};
}

}  // namespace refsem::net
