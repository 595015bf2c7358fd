#include "fedncf/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "fedncf/errors.hpp"
#include "fedncf/rng.hpp"

namespace fedncf {

namespace {

constexpr double kProbClamp = 1e-7;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void fill_normal(Rng& rng, double* dst, std::size_t n, double stddev) {
  for (std::size_t i = 0; i < n; ++i) {
    dst[i] = rng.normal(0.0, stddev);
  }
}

/// Scratch space for one instance's forward pass, reused across instances.
struct Workspace {
  std::vector<double> hg;                  // elementwise product, gmf path
  std::vector<std::vector<double>> acts;   // acts[0]=tower input, then layer outputs
  std::vector<std::vector<double>> zs;     // pre-activations per tower layer
  std::vector<double> pred_in;
  std::vector<double> dx, dz;              // backward scratch
};

/// Forward pass for one (user_row, item). Returns the probability and leaves
/// every intermediate in `ws` for the backward pass.
double forward_one(const ModelParams& p, const UserBank& users,
                   std::int32_t user_row, std::int32_t item, Workspace& ws) {
  const ModelConfig& cfg = p.config;
  const std::size_t d = static_cast<std::size_t>(cfg.embedding_dim);
  const std::size_t tower = p.network.layers.size() - 1;

  if (cfg.has_gmf_path()) {
    const double* u = users.gmf.row(user_row);
    const double* v = p.item_gmf.row(item);
    ws.hg.resize(d);
    for (std::size_t i = 0; i < d; ++i) {
      ws.hg[i] = u[i] * v[i];
    }
  }

  if (cfg.has_mlp_path()) {
    ws.acts.resize(tower + 1);
    ws.zs.resize(tower);
    auto& x0 = ws.acts[0];
    x0.resize(2 * d);
    std::memcpy(x0.data(), users.mlp.row(user_row), d * sizeof(double));
    std::memcpy(x0.data() + d, p.item_mlp.row(item), d * sizeof(double));
    for (std::size_t l = 0; l < tower; ++l) {
      const DenseLayer& layer = p.network.layers[l];
      const std::vector<double>& x = ws.acts[l];
      auto& z = ws.zs[l];
      auto& a = ws.acts[l + 1];
      z.resize(layer.weight.rows);
      a.resize(layer.weight.rows);
      for (std::size_t o = 0; o < layer.weight.rows; ++o) {
        const double* w = layer.weight.row(o);
        double acc = layer.bias[o];
        for (std::size_t i = 0; i < layer.weight.cols; ++i) {
          acc += w[i] * x[i];
        }
        z[o] = acc;
        a[o] = acc > 0.0 ? acc : 0.0;
      }
    }
  }

  ws.pred_in.clear();
  if (cfg.has_gmf_path()) {
    ws.pred_in.insert(ws.pred_in.end(), ws.hg.begin(), ws.hg.end());
  }
  if (cfg.has_mlp_path()) {
    const auto& top = ws.acts[tower];
    ws.pred_in.insert(ws.pred_in.end(), top.begin(), top.end());
  }

  const DenseLayer& pred = p.network.layers.back();
  double logit = pred.bias[0];
  const double* w = pred.weight.row(0);
  for (std::size_t i = 0; i < ws.pred_in.size(); ++i) {
    logit += w[i] * ws.pred_in[i];
  }
  return sigmoid(logit);
}

std::vector<double>& sparse_row(std::map<std::int32_t, std::vector<double>>& m,
                                std::int32_t key, std::size_t dim) {
  auto& row = m[key];
  if (row.empty()) {
    row.assign(dim, 0.0);
  }
  return row;
}

double clamped_bce(double prob, double label) {
  const double q = std::clamp(prob, kProbClamp, 1.0 - kProbClamp);
  return -(label * std::log(q) + (1.0 - label) * std::log(1.0 - q));
}

}  // namespace

ModelKind model_kind_from_string(const std::string& name) {
  if (name == "gmf") return ModelKind::kGmf;
  if (name == "mlp") return ModelKind::kMlp;
  if (name == "neumf") return ModelKind::kNeuMf;
  throw ConfigError("unknown model '" + name + "'");
}

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::kGmf: return "gmf";
    case ModelKind::kMlp: return "mlp";
    case ModelKind::kNeuMf: return "neumf";
  }
  return "?";
}

int ModelConfig::prediction_input() const {
  int width = 0;
  if (has_gmf_path()) {
    width += embedding_dim;
  }
  if (has_mlp_path()) {
    width += mlp_layers.empty() ? 2 * embedding_dim : mlp_layers.back();
  }
  return width;
}

std::size_t NetworkParams::parameter_count() const {
  std::size_t n = 0;
  for (const DenseLayer& layer : layers) {
    n += layer.weight.size() + layer.bias.size();
  }
  return n;
}

void Gradients::reset(const ModelParams& params) {
  user_gmf.clear();
  user_mlp.clear();
  item_gmf.clear();
  item_mlp.clear();
  network.resize(params.network.layers.size());
  for (std::size_t l = 0; l < network.size(); ++l) {
    const DenseLayer& src = params.network.layers[l];
    DenseLayer& dst = network[l];
    if (!dst.weight.same_shape(src.weight)) {
      dst = DenseLayer(src.weight.rows, src.weight.cols);
    } else {
      std::fill(dst.weight.data.begin(), dst.weight.data.end(), 0.0);
      std::fill(dst.bias.begin(), dst.bias.end(), 0.0);
    }
  }
}

ModelParams init_model(const ModelConfig& config, std::uint64_t seed) {
  if (config.num_items <= 0) {
    throw ConfigError("model needs num_items > 0");
  }
  if (config.embedding_dim <= 0) {
    throw ConfigError("embedding_dim must be > 0");
  }
  if (config.has_mlp_path()) {
    for (int h : config.mlp_layers) {
      if (h <= 0) {
        throw ConfigError("mlp layer widths must be > 0");
      }
    }
  }

  ModelParams p;
  p.config = config;
  const std::size_t n = static_cast<std::size_t>(config.num_items);
  const std::size_t d = static_cast<std::size_t>(config.embedding_dim);

  if (config.has_gmf_path()) {
    p.item_gmf = Matrix(n, d);
    Rng rng(derive_seed(seed, seed_tag::kModelInit, 1));
    fill_normal(rng, p.item_gmf.data.data(), p.item_gmf.size(), 0.01);
  }
  if (config.has_mlp_path()) {
    p.item_mlp = Matrix(n, d);
    Rng rng(derive_seed(seed, seed_tag::kModelInit, 2));
    fill_normal(rng, p.item_mlp.data.data(), p.item_mlp.size(), 0.01);
  }

  Rng rng(derive_seed(seed, seed_tag::kModelInit, 3));
  auto xavier_layer = [&rng](std::size_t out, std::size_t in) {
    DenseLayer layer(out, in);
    const double bound =
        std::sqrt(6.0 / static_cast<double>(in + out));
    for (double& w : layer.weight.data) {
      w = rng.uniform(-bound, bound);
    }
    return layer;
  };
  if (config.has_mlp_path()) {
    std::size_t in = 2 * d;
    for (int h : config.mlp_layers) {
      p.network.layers.push_back(xavier_layer(static_cast<std::size_t>(h), in));
      in = static_cast<std::size_t>(h);
    }
  }
  p.network.layers.push_back(
      xavier_layer(1, static_cast<std::size_t>(config.prediction_input())));
  return p;
}

UserBank init_users(const ModelConfig& config, std::int32_t num_users,
                    std::uint64_t seed) {
  const std::size_t d = static_cast<std::size_t>(config.embedding_dim);
  UserBank bank;
  if (config.has_gmf_path()) {
    bank.gmf = Matrix(num_users, d);
  }
  if (config.has_mlp_path()) {
    bank.mlp = Matrix(num_users, d);
  }
  for (std::int32_t u = 0; u < num_users; ++u) {
    Rng rng(derive_seed(seed, seed_tag::kUserVector,
                        static_cast<std::uint64_t>(u)));
    if (config.has_gmf_path()) {
      fill_normal(rng, bank.gmf.row(u), d, 0.01);
    }
    if (config.has_mlp_path()) {
      fill_normal(rng, bank.mlp.row(u), d, 0.01);
    }
  }
  return bank;
}

UserBank init_single_user(const ModelConfig& config, std::int32_t user,
                          std::uint64_t seed) {
  const std::size_t d = static_cast<std::size_t>(config.embedding_dim);
  UserBank bank;
  if (config.has_gmf_path()) {
    bank.gmf = Matrix(1, d);
  }
  if (config.has_mlp_path()) {
    bank.mlp = Matrix(1, d);
  }
  Rng rng(derive_seed(seed, seed_tag::kUserVector,
                      static_cast<std::uint64_t>(user)));
  if (config.has_gmf_path()) {
    fill_normal(rng, bank.gmf.row(0), d, 0.01);
  }
  if (config.has_mlp_path()) {
    fill_normal(rng, bank.mlp.row(0), d, 0.01);
  }
  return bank;
}

double predict(const ModelParams& params, const UserBank& users,
               std::int32_t user_row, std::int32_t item) {
  Workspace ws;
  return forward_one(params, users, user_row, item, ws);
}

void predict_items(const ModelParams& params, const UserBank& users,
                   std::int32_t user_row, const std::vector<std::int32_t>& items,
                   std::vector<double>& out_scores) {
  Workspace ws;
  out_scores.resize(items.size());
  for (std::size_t i = 0; i < items.size(); ++i) {
    out_scores[i] = forward_one(params, users, user_row, items[i], ws);
  }
}

double batch_loss(const ModelParams& params, const UserBank& users,
                  const std::vector<BatchInstance>& batch) {
  Workspace ws;
  double sum = 0.0;
  for (const BatchInstance& inst : batch) {
    sum += clamped_bce(forward_one(params, users, inst.user, inst.item, ws),
                       inst.label);
  }
  return sum / static_cast<double>(batch.size());
}

std::uint64_t activation_signature(const ModelParams& params,
                                   const UserBank& users,
                                   const std::vector<BatchInstance>& batch) {
  Workspace ws;
  std::uint64_t hash = 1469598103934665603ull;  // FNV-1a
  for (const BatchInstance& inst : batch) {
    forward_one(params, users, inst.user, inst.item, ws);
    for (const auto& z : ws.zs) {
      for (double v : z) {
        hash ^= static_cast<std::uint64_t>(v > 0.0);
        hash *= 1099511628211ull;
      }
    }
  }
  return hash;
}

double forward_backward(const ModelParams& p, const UserBank& users,
                        const std::vector<BatchInstance>& batch,
                        Gradients& grads) {
  grads.reset(p);
  const ModelConfig& cfg = p.config;
  const std::size_t d = static_cast<std::size_t>(cfg.embedding_dim);
  const std::size_t tower = p.network.layers.size() - 1;

  Workspace ws;
  double loss_sum = 0.0;
  for (const BatchInstance& inst : batch) {
    const double prob = forward_one(p, users, inst.user, inst.item, ws);
    loss_sum += clamped_bce(prob, inst.label);

    // Gradient of the clamped loss w.r.t. the logit. In the clamp region the
    // loss is locally constant, so the gradient is zero there.
    double delta = 0.0;
    if (prob > kProbClamp && prob < 1.0 - kProbClamp) {
      delta = prob - inst.label;
    }

    const DenseLayer& pred = p.network.layers.back();
    DenseLayer& pred_g = grads.network.back();
    {
      double* gw = pred_g.weight.row(0);
      for (std::size_t i = 0; i < ws.pred_in.size(); ++i) {
        gw[i] += delta * ws.pred_in[i];
      }
      pred_g.bias[0] += delta;
    }

    const double* wp = pred.weight.row(0);
    std::size_t offset = 0;
    if (cfg.has_gmf_path()) {
      const double* u = users.gmf.row(inst.user);
      const double* v = p.item_gmf.row(inst.item);
      auto& gu = sparse_row(grads.user_gmf, inst.user, d);
      auto& gv = sparse_row(grads.item_gmf, inst.item, d);
      for (std::size_t i = 0; i < d; ++i) {
        const double dh = delta * wp[i];
        gu[i] += dh * v[i];
        gv[i] += dh * u[i];
      }
      offset = d;
    }

    if (cfg.has_mlp_path()) {
      // Backprop through the tower, from the prediction input down.
      auto& dx = ws.dx;
      dx.resize(ws.acts[tower].size());
      for (std::size_t i = 0; i < dx.size(); ++i) {
        dx[i] = delta * wp[offset + i];
      }
      for (std::size_t l = tower; l-- > 0;) {
        const DenseLayer& layer = p.network.layers[l];
        DenseLayer& layer_g = grads.network[l];
        const std::vector<double>& x = ws.acts[l];
        const std::vector<double>& z = ws.zs[l];
        auto& dz = ws.dz;
        dz.resize(layer.weight.rows);
        for (std::size_t o = 0; o < layer.weight.rows; ++o) {
          dz[o] = z[o] > 0.0 ? dx[o] : 0.0;
        }
        for (std::size_t o = 0; o < layer.weight.rows; ++o) {
          const double g = dz[o];
          if (g == 0.0) {
            continue;
          }
          double* gw = layer_g.weight.row(o);
          for (std::size_t i = 0; i < layer.weight.cols; ++i) {
            gw[i] += g * x[i];
          }
          layer_g.bias[o] += g;
        }
        dx.assign(layer.weight.cols, 0.0);
        for (std::size_t o = 0; o < layer.weight.rows; ++o) {
          const double g = dz[o];
          if (g == 0.0) {
            continue;
          }
          const double* w = layer.weight.row(o);
          for (std::size_t i = 0; i < layer.weight.cols; ++i) {
            dx[i] += g * w[i];
          }
        }
      }
      auto& gu = sparse_row(grads.user_mlp, inst.user, d);
      auto& gv = sparse_row(grads.item_mlp, inst.item, d);
      for (std::size_t i = 0; i < d; ++i) {
        gu[i] += ws.dx[i];
        gv[i] += ws.dx[d + i];
      }
    }
  }

  // Everything above accumulated per-instance sums; the loss is a mean.
  const double scale = 1.0 / static_cast<double>(batch.size());
  auto scale_map = [scale](std::map<std::int32_t, std::vector<double>>& m) {
    for (auto& [key, row] : m) {
      for (double& g : row) {
        g *= scale;
      }
    }
  };
  scale_map(grads.user_gmf);
  scale_map(grads.user_mlp);
  scale_map(grads.item_gmf);
  scale_map(grads.item_mlp);
  for (DenseLayer& layer : grads.network) {
    for (double& g : layer.weight.data) {
      g *= scale;
    }
    for (double& g : layer.bias) {
      g *= scale;
    }
  }
  return loss_sum * scale;
}

AdamState::AdamState(const ModelParams& params) {
  net_m_.resize(params.network.layers.size());
  net_v_.resize(params.network.layers.size());
  for (std::size_t l = 0; l < params.network.layers.size(); ++l) {
    const DenseLayer& src = params.network.layers[l];
    net_m_[l] = DenseLayer(src.weight.rows, src.weight.cols);
    net_v_[l] = DenseLayer(src.weight.rows, src.weight.cols);
  }
}

void AdamState::apply_sparse(
    const AdamConfig& cfg, double bc1, double bc2,
    const std::map<std::int32_t, std::vector<double>>& grad, Moments& mom,
    Matrix& param) {
  for (const auto& [key, g] : grad) {
    auto& m = mom.m[key];
    auto& v = mom.v[key];
    if (m.empty()) {
      m.assign(g.size(), 0.0);
      v.assign(g.size(), 0.0);
    }
    double* w = param.row(key);
    for (std::size_t i = 0; i < g.size(); ++i) {
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      w[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
  }
}

void AdamState::apply(const AdamConfig& cfg, const Gradients& grads,
                      ModelParams& params, UserBank& users) {
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t_));

  apply_sparse(cfg, bc1, bc2, grads.user_gmf, user_gmf_, users.gmf);
  apply_sparse(cfg, bc1, bc2, grads.user_mlp, user_mlp_, users.mlp);
  apply_sparse(cfg, bc1, bc2, grads.item_gmf, item_gmf_, params.item_gmf);
  apply_sparse(cfg, bc1, bc2, grads.item_mlp, item_mlp_, params.item_mlp);

  for (std::size_t l = 0; l < grads.network.size(); ++l) {
    const DenseLayer& g = grads.network[l];
    DenseLayer& m = net_m_[l];
    DenseLayer& v = net_v_[l];
    DenseLayer& p = params.network.layers[l];
    for (std::size_t i = 0; i < g.weight.size(); ++i) {
      m.weight.data[i] = cfg.beta1 * m.weight.data[i] +
                         (1.0 - cfg.beta1) * g.weight.data[i];
      v.weight.data[i] = cfg.beta2 * v.weight.data[i] +
                         (1.0 - cfg.beta2) * g.weight.data[i] * g.weight.data[i];
      p.weight.data[i] -= cfg.lr * (m.weight.data[i] / bc1) /
                          (std::sqrt(v.weight.data[i] / bc2) + cfg.eps);
    }
    for (std::size_t i = 0; i < g.bias.size(); ++i) {
      m.bias[i] = cfg.beta1 * m.bias[i] + (1.0 - cfg.beta1) * g.bias[i];
      v.bias[i] = cfg.beta2 * v.bias[i] + (1.0 - cfg.beta2) * g.bias[i] * g.bias[i];
      p.bias[i] -= cfg.lr * (m.bias[i] / bc1) /
                   (std::sqrt(v.bias[i] / bc2) + cfg.eps);
    }
  }
}

std::size_t transmitted_parameter_count(const ModelConfig& config) {
  const std::size_t n = static_cast<std::size_t>(config.num_items);
  const std::size_t d = static_cast<std::size_t>(config.embedding_dim);
  std::size_t count = 0;
  if (config.has_gmf_path()) {
    count += n * d;
  }
  if (config.has_mlp_path()) {
    count += n * d;
    std::size_t in = 2 * d;
    for (int h : config.mlp_layers) {
      count += in * static_cast<std::size_t>(h) + static_cast<std::size_t>(h);
      in = static_cast<std::size_t>(h);
    }
  }
  count += static_cast<std::size_t>(config.prediction_input()) + 1;
  return count;
}

}  // namespace fedncf
