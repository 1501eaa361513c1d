#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "refsem/scene.hpp"

namespace refsem::net {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// The encoder output f(W): a hidden_dim-dimensional message vector.
using MessageVector = VectorXd;

struct ModelConfig {
  int hidden_dim = 64;
  int feature_dim = 0;  // from the schema
  int decoder_hidden = 64;
  std::uint64_t seed = 0;
  double learning_rate = 1e-3;
  int batch_size = 100;
  int train_steps = 10000;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;

  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

// GRU cell weights. Input is [object features; target bit], so the input
// size is feature_dim + 1.
struct GruParams {
  MatrixXd w_update, u_update;
  VectorXd b_update;
  MatrixXd w_reset, u_reset;
  VectorXd b_reset;
  MatrixXd w_cand, u_cand;
  VectorXd b_cand;
};

// One hidden layer on [message; object features], rectifier units, sigmoid
// output.
struct DecoderParams {
  MatrixXd w1;
  VectorXd b1;
  VectorXd w2;
  VectorXd b2;  // single entry
};

struct ModelParams {
  GruParams encoder;
  DecoderParams decoder;
};

// Flat view of one parameter (or gradient) tensor. The enumeration order is
// fixed; Adam state, checkpoints, and gradient checks all rely on it.
struct TensorRef {
  std::string name;
  double* data;
  Eigen::Index rows;
  Eigen::Index cols;

  Eigen::Index count() const { return rows * cols; }
};

std::vector<TensorRef> tensor_refs(ModelParams& params);

// Zero tensors with the shapes implied by `config`.
ModelParams zero_params(const ModelConfig& config);

// Seeded initialization, uniform in [-0.1, 0.1].
ModelParams init_params(const ModelConfig& config);

// Run the GRU over the scene's objects (features plus target bit) and return
// the final hidden state.
MessageVector encode(const ModelParams& params, const scene::Scene& scene,
                     const scene::Schema& schema);

// Membership probability for one object under message `f`. Strictly inside
// (0, 1) for finite inputs.
double decode(const ModelParams& params, const MessageVector& f,
              const VectorXd& object_features);

// Independent decode of every object in `world`.
VectorXd decode_world(const ModelParams& params, const MessageVector& f,
                      const scene::World& world, const scene::Schema& schema);

// Mean binary cross-entropy over all objects of all scenes in the batch.
double loss(const ModelParams& params, const std::vector<scene::Scene>& batch,
            const scene::Schema& schema);

// Exact reverse-mode gradient of `loss`. Returned tensors mirror
// tensor_refs(params).
ModelParams grad(const ModelParams& params,
                 const std::vector<scene::Scene>& batch,
                 const scene::Schema& schema);

// Both loss and gradient in one backward pass.
std::pair<double, ModelParams> loss_and_grad(const ModelParams& params,
                                             const std::vector<scene::Scene>& batch,
                                             const scene::Schema& schema);

// Scene i of a deterministic infinite stream.
using SceneSource = std::function<scene::Scene(std::uint64_t index)>;

// Adam on freshly drawn minibatches. Deterministic per config seed; raises
// TrainingError with the step index if the loss goes non-finite. The
// optional callback observes (step, loss) before each update.
ModelParams train(const ModelConfig& config, const scene::Schema& schema,
                  const SceneSource& source,
                  const std::function<void(int step, double loss)>& on_step = {});

// Fraction of objects whose thresholded decode matches the target bit.
double object_accuracy(const ModelParams& params,
                       const std::vector<scene::Scene>& scenes,
                       const scene::Schema& schema);

// Binary checkpoint: format version, config header, then named little-endian
// f64 tensors. Round-trips bit-exactly.
void save_checkpoint(const ModelParams& params, const ModelConfig& config,
                     const std::string& path);
std::pair<ModelParams, ModelConfig> load_checkpoint(const std::string& path);

}  // namespace refsem::net
