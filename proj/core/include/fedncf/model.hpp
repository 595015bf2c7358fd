#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fedncf/matrix.hpp"

namespace fedncf {

enum class ModelKind { kGmf, kMlp, kNeuMf };

ModelKind model_kind_from_string(const std::string& name);
std::string to_string(ModelKind kind);

struct ModelConfig {
  ModelKind kind = ModelKind::kGmf;
  std::int32_t num_items = 0;
  int embedding_dim = 12;
  // Hidden widths of the perceptron tower, input to output. The tower input
  // is the concatenation [user, item], so the first weight matrix has
  // 2 * embedding_dim columns. Ignored by pure GMF.
  std::vector<int> mlp_layers = {48, 24, 12, 6};

  bool has_gmf_path() const { return kind != ModelKind::kMlp; }
  bool has_mlp_path() const { return kind != ModelKind::kGmf; }
  // Width of the final prediction layer's input.
  int prediction_input() const;
};

struct DenseLayer {
  Matrix weight;  // out x in, row-major
  std::vector<double> bias;

  DenseLayer() = default;
  DenseLayer(std::size_t out, std::size_t in)
      : weight(out, in), bias(out, 0.0) {}
};

/// Dense part of a model: the perceptron tower (empty for GMF) followed by
/// the prediction layer, always last.
struct NetworkParams {
  std::vector<DenseLayer> layers;

  std::size_t parameter_count() const;
};

/// Shared (server-aggregated) state: item embedding matrices plus the dense
/// network. A path's matrix is empty when the model kind lacks that path.
struct ModelParams {
  ModelConfig config;
  Matrix item_gmf;  // num_items x D
  Matrix item_mlp;  // num_items x D
  NetworkParams network;
};

/// User embeddings. Federated clients hold a single-row bank for their own
/// vector; the centralized baseline holds one row per user. Row u is always
/// seeded identically for a given master seed, so the two setups start from
/// the same user state.
struct UserBank {
  Matrix gmf;
  Matrix mlp;
};

struct BatchInstance {
  std::int32_t user = 0;  // row into the UserBank
  std::int32_t item = 0;
  double label = 0.0;
};

/// Accumulated gradients of the mean binary cross-entropy over a batch.
/// Embedding gradients are sparse (only rows that appeared in the batch);
/// dense gradients mirror the network layer shapes.
struct Gradients {
  std::map<std::int32_t, std::vector<double>> user_gmf;
  std::map<std::int32_t, std::vector<double>> user_mlp;
  std::map<std::int32_t, std::vector<double>> item_gmf;
  std::map<std::int32_t, std::vector<double>> item_mlp;
  std::vector<DenseLayer> network;

  /// Clears sparse entries and zeroes the dense part, resizing it to match
  /// `params` if needed.
  void reset(const ModelParams& params);
};

/// Item matrices are drawn row by row from normal(0, 0.01); dense weights are
/// Xavier-uniform with zero biases. Layout and draw order are fixed so equal
/// seeds give bit-equal models.
ModelParams init_model(const ModelConfig& config, std::uint64_t seed);

/// One bank row per user, row u drawn from its own derived seed.
UserBank init_users(const ModelConfig& config, std::int32_t num_users,
                    std::uint64_t seed);

/// Initializes the single row of a one-row bank exactly as row `user` of the
/// full bank would be.
UserBank init_single_user(const ModelConfig& config, std::int32_t user,
                          std::uint64_t seed);

double predict(const ModelParams& params, const UserBank& users,
               std::int32_t user_row, std::int32_t item);

/// Scores a candidate list for one user. Faster than repeated predict() for
/// the evaluation hot path.
void predict_items(const ModelParams& params, const UserBank& users,
                   std::int32_t user_row, const std::vector<std::int32_t>& items,
                   std::vector<double>& out_scores);

/// Mean binary cross-entropy over the batch; probabilities are clamped to
/// [1e-7, 1 - 1e-7] inside the log only.
double batch_loss(const ModelParams& params, const UserBank& users,
                  const std::vector<BatchInstance>& batch);

/// Hash of the sign pattern of every tower pre-activation over the batch.
/// The loss is smooth wherever this stays constant, which is what a
/// finite-difference probe needs to know: a perturbation that flips it has
/// crossed a kink and its difference quotient is meaningless.
std::uint64_t activation_signature(const ModelParams& params,
                                   const UserBank& users,
                                   const std::vector<BatchInstance>& batch);

/// Computes batch_loss and its exact gradients in one pass. `grads` is reset
/// first. Returns the loss.
double forward_backward(const ModelParams& params, const UserBank& users,
                        const std::vector<BatchInstance>& batch,
                        Gradients& grads);

struct AdamConfig {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam with sparse semantics: only rows present in the gradient move, moment
/// rows are created lazily, and bias correction uses one global step count
/// shared by all parameters.
class AdamState {
 public:
  explicit AdamState(const ModelParams& params);

  void apply(const AdamConfig& cfg, const Gradients& grads, ModelParams& params,
             UserBank& users);

  std::int64_t step() const { return t_; }

 private:
  struct Moments {
    std::map<std::int32_t, std::vector<double>> m, v;
  };
  Moments user_gmf_, user_mlp_, item_gmf_, item_mlp_;
  std::vector<DenseLayer> net_m_, net_v_;
  std::int64_t t_ = 0;

  void apply_sparse(const AdamConfig& cfg, double bc1, double bc2,
                    const std::map<std::int32_t, std::vector<double>>& grad,
                    Moments& mom, Matrix& param);
};

/// Number of doubles a client uploads per aggregation round for this model:
/// every item embedding row plus all dense weights and biases.
std::size_t transmitted_parameter_count(const ModelConfig& config);

}  // namespace fedncf
