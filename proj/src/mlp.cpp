#include "solarcast/mlp.hpp"

#include <cmath>
#include <string>

#include <spdlog/spdlog.h>

#include "solarcast/errors.hpp"
#include "solarcast/parallel.hpp"

namespace solarcast {

namespace {

struct AdamState {
  std::vector<Eigen::MatrixXd> m_w, v_w;
  std::vector<Eigen::VectorXd> m_b, v_b;
  long step = 0;

  explicit AdamState(const MlpModel& model) {
    for (std::size_t l = 0; l < model.weights.size(); ++l) {
      m_w.push_back(Eigen::MatrixXd::Zero(model.weights[l].rows(), model.weights[l].cols()));
      v_w.push_back(m_w.back());
      m_b.push_back(Eigen::VectorXd::Zero(model.biases[l].size()));
      v_b.push_back(m_b.back());
    }
  }

  void update(MlpModel& model, const MlpGradient& g, double lr) {
    constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    ++step;
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
    for (std::size_t l = 0; l < model.weights.size(); ++l) {
      m_w[l] = beta1 * m_w[l] + (1.0 - beta1) * g.weights[l];
      v_w[l] = beta2 * v_w[l] + (1.0 - beta2) * g.weights[l].cwiseAbs2();
      model.weights[l].array() -= lr * (m_w[l].array() / c1) / ((v_w[l].array() / c2).sqrt() + eps);
      m_b[l] = beta1 * m_b[l] + (1.0 - beta1) * g.biases[l];
      v_b[l] = beta2 * v_b[l] + (1.0 - beta2) * g.biases[l].cwiseAbs2();
      model.biases[l].array() -= lr * (m_b[l].array() / c1) / ((v_b[l].array() / c2).sqrt() + eps);
    }
  }
};

double evaluate_mse(const MlpModel& model, const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
  // Chunked to bound memory on large pools; the summation order is fixed.
  constexpr Eigen::Index kChunk = 4096;
  double total = 0.0;
  for (Eigen::Index c = 0; c < x.cols(); c += kChunk) {
    const Eigen::Index n = std::min(kChunk, x.cols() - c);
    total += (model.forward_batch(x.middleCols(c, n)) - y.middleCols(c, n)).squaredNorm();
  }
  return total / static_cast<double>(x.cols() * y.rows());
}

StartTrace train_one_start(MlpModel& best_model, const Eigen::MatrixXd& x_train, const Eigen::MatrixXd& y_train,
                           const Eigen::MatrixXd& x_val, const Eigen::MatrixXd& y_val,
                           const std::vector<int>& layer_sizes, const TrainConfig& cfg, int start) {
  Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(start)));
  MlpModel model = make_mlp(layer_sizes, rng);
  // Output bias starts at the target mean so training begins in the right units.
  model.biases.back() = y_train.rowwise().mean();
  best_model = model;

  StartTrace trace;
  AdamState adam(model);
  MlpGradient grad;
  const Eigen::Index n = x_train.cols();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  const std::size_t hidden_layers = layer_sizes.size() - 2;
  const double keep = 1.0 - cfg.dropout_rate;
  std::vector<Eigen::MatrixXd> masks(hidden_layers);
  int since_best = 0;

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    rng.shuffle(order.begin(), order.end());
    bool diverged = false;
    for (Eigen::Index b = 0; b < n && !diverged; b += cfg.batch_size) {
      const Eigen::Index len = std::min<Eigen::Index>(cfg.batch_size, n - b);
      const std::vector<Eigen::Index> idx(order.begin() + b, order.begin() + b + len);
      const Eigen::MatrixXd xb = x_train(Eigen::all, idx);
      const Eigen::MatrixXd yb = y_train(Eigen::all, idx);
      const std::vector<Eigen::MatrixXd>* mask_ptr = nullptr;
      if (cfg.dropout_rate > 0.0) {
        for (std::size_t l = 0; l < hidden_layers; ++l) {
          masks[l].resize(layer_sizes[l + 1], len);
          for (Eigen::Index k = 0; k < masks[l].size(); ++k) masks[l](k) = rng.uniform() < keep ? 1.0 / keep : 0.0;
        }
        mask_ptr = &masks;
      }
      const double loss = mse_loss(model, xb, yb, &grad, mask_ptr);
      if (!std::isfinite(loss)) {
        diverged = true;
        break;
      }
      adam.update(model, grad, cfg.learning_rate);
    }
    EpochRecord rec{epoch, diverged ? NAN : evaluate_mse(model, x_train, y_train),
                    diverged ? NAN : evaluate_mse(model, x_val, y_val)};
    if (!std::isfinite(rec.train_mse) || !std::isfinite(rec.val_mse)) {
      spdlog::warn("training start {} diverged at epoch {}; abandoning it", start, epoch);
      trace.aborted = true;
      trace.epochs.push_back(rec);
      return trace;
    }
    trace.epochs.push_back(rec);
    if (rec.val_mse < trace.best_val_mse) {
      trace.best_val_mse = rec.val_mse;
      trace.best_epoch = epoch;
      best_model = model;
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      break;
    }
  }
  return trace;
}

}  // namespace

std::size_t MlpModel::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    n += static_cast<std::size_t>(weights[l].size() + biases[l].size());
  }
  return n;
}

void MlpModel::validate() const {
  if (layer_sizes.size() < 2) throw ParameterError("network needs at least input and output layers");
  if (weights.size() != layer_sizes.size() - 1 || biases.size() != weights.size()) {
    throw ParameterError("layer count does not match parameter count");
  }
  for (std::size_t l = 0; l < weights.size(); ++l) {
    if (layer_sizes[l] < 1 || layer_sizes[l + 1] < 1 || weights[l].rows() != layer_sizes[l + 1] ||
        weights[l].cols() != layer_sizes[l] || biases[l].size() != layer_sizes[l + 1]) {
      throw ParameterError("shape mismatch in layer " + std::to_string(l));
    }
    if (!weights[l].allFinite() || !biases[l].allFinite()) {
      throw ParameterError("non-finite parameters in layer " + std::to_string(l));
    }
  }
}

Eigen::VectorXd MlpModel::forward(const Eigen::VectorXd& x) const {
  if (x.size() != input_dim()) throw ParameterError("input width does not match the network");
  Eigen::VectorXd a = x;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    Eigen::VectorXd z = weights[l] * a + biases[l];
    a = l + 1 < weights.size() ? Eigen::VectorXd(z.cwiseMax(0.0)) : z;
  }
  return a;
}

Eigen::MatrixXd MlpModel::forward_batch(const Eigen::MatrixXd& x) const {
  if (x.rows() != input_dim()) throw ParameterError("input width does not match the network");
  Eigen::MatrixXd a = x;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    Eigen::MatrixXd z = weights[l] * a;
    z.colwise() += biases[l];
    if (l + 1 < weights.size()) z = z.cwiseMax(0.0);
    a = std::move(z);
  }
  return a;
}

MlpModel make_mlp(const std::vector<int>& layer_sizes, Rng& rng) {
  MlpModel m;
  m.layer_sizes = layer_sizes;
  if (layer_sizes.size() < 2) throw ParameterError("network needs at least input and output layers");
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    if (layer_sizes[l] < 1 || layer_sizes[l + 1] < 1) throw ParameterError("layer sizes must be positive");
    const double limit = std::sqrt(6.0 / layer_sizes[l]);
    Eigen::MatrixXd w(layer_sizes[l + 1], layer_sizes[l]);
    for (Eigen::Index k = 0; k < w.size(); ++k) w(k) = rng.uniform(-limit, limit);
    m.weights.push_back(std::move(w));
    m.biases.push_back(Eigen::VectorXd::Zero(layer_sizes[l + 1]));
  }
  return m;
}

double mse_loss(const MlpModel& model, const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, MlpGradient* grad,
                const std::vector<Eigen::MatrixXd>* dropout_masks) {
  const std::size_t n_layers = model.weights.size();
  if (x.rows() != model.input_dim() || y.rows() != model.output_dim() || x.cols() != y.cols()) {
    throw ParameterError("batch shape does not match the network");
  }
  // activations[l] is the input to layer l; pre[l] its pre-activation output.
  std::vector<Eigen::MatrixXd> activations(n_layers + 1);
  std::vector<Eigen::MatrixXd> pre(n_layers);
  activations[0] = x;
  for (std::size_t l = 0; l < n_layers; ++l) {
    pre[l] = model.weights[l] * activations[l];
    pre[l].colwise() += model.biases[l];
    if (l + 1 < n_layers) {
      activations[l + 1] = pre[l].cwiseMax(0.0);
      if (dropout_masks) activations[l + 1] = activations[l + 1].cwiseProduct((*dropout_masks)[l]);
    } else {
      activations[l + 1] = pre[l];
    }
  }
  const Eigen::MatrixXd diff = activations[n_layers] - y;
  const double denom = static_cast<double>(y.size());
  const double loss = diff.squaredNorm() / denom;
  if (!grad) return loss;

  grad->weights.resize(n_layers);
  grad->biases.resize(n_layers);
  Eigen::MatrixXd delta = (2.0 / denom) * diff;
  for (std::size_t l = n_layers; l-- > 0;) {
    grad->weights[l].noalias() = delta * activations[l].transpose();
    grad->biases[l] = delta.rowwise().sum();
    if (l == 0) break;
    Eigen::MatrixXd back = model.weights[l].transpose() * delta;
    if (dropout_masks) back = back.cwiseProduct((*dropout_masks)[l - 1]);
    delta = back.cwiseProduct((pre[l - 1].array() > 0.0).cast<double>().matrix());
  }
  return loss;
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ParameterError("learning rate must be positive");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw ParameterError("dropout rate must lie in [0, 1)");
  if (batch_size < 1) throw ParameterError("batch size must be >= 1");
  if (max_epochs < 1) throw ParameterError("max_epochs must be >= 1");
  if (patience < 1 || patience >= max_epochs) throw ParameterError("patience must lie in [1, max_epochs)");
  if (n_starts < 1) throw ParameterError("n_starts must be >= 1");
}

TrainResult mlp_train(const Eigen::MatrixXd& x_train, const Eigen::MatrixXd& y_train, const Eigen::MatrixXd& x_val,
                      const Eigen::MatrixXd& y_val, const std::vector<int>& layer_sizes, const TrainConfig& cfg) {
  cfg.validate();
  if (x_train.cols() == 0 || x_val.cols() == 0) throw ParameterError("training and validation sets must be non-empty");
  if (layer_sizes.size() < 2 || x_train.rows() != layer_sizes.front() || y_train.rows() != layer_sizes.back() ||
      x_val.rows() != x_train.rows() || y_val.rows() != y_train.rows() || x_train.cols() != y_train.cols() ||
      x_val.cols() != y_val.cols()) {
    throw ParameterError("training data does not match the architecture");
  }

  const auto starts = static_cast<std::size_t>(cfg.n_starts);
  std::vector<MlpModel> models(starts);
  TrainResult result;
  result.trace.starts.resize(starts);
  parallel_for(starts, [&](std::size_t s) {
    result.trace.starts[s] =
        train_one_start(models[s], x_train, y_train, x_val, y_val, layer_sizes, cfg, static_cast<int>(s));
  });

  for (std::size_t s = 0; s < starts; ++s) {
    const auto& t = result.trace.starts[s];
    if (t.aborted || t.best_epoch == 0) continue;
    if (result.trace.best_start < 0 ||
        t.best_val_mse < result.trace.starts[static_cast<std::size_t>(result.trace.best_start)].best_val_mse) {
      result.trace.best_start = static_cast<int>(s);
    }
  }
  if (result.trace.best_start < 0) throw TrainingFailure("every training start diverged");
  result.model = std::move(models[static_cast<std::size_t>(result.trace.best_start)]);
  return result;
}

}  // namespace solarcast
