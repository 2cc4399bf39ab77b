#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "solarcast/rng.hpp"

namespace solarcast {

// Fully connected network: rectifier hidden layers, identity output.
// weights[l] maps layer l (size layer_sizes[l]) to layer l + 1.
struct MlpModel {
  std::vector<int> layer_sizes;
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;

  int input_dim() const { return layer_sizes.front(); }
  int output_dim() const { return layer_sizes.back(); }
  std::size_t parameter_count() const;

  // Throws ParameterError on a broken shape chain or non-finite parameters.
  void validate() const;

  Eigen::VectorXd forward(const Eigen::VectorXd& x) const;
  // Columns of `x` are samples.
  Eigen::MatrixXd forward_batch(const Eigen::MatrixXd& x) const;
};

// Fan-in scaled uniform (He) initialisation; biases start at zero.
MlpModel make_mlp(const std::vector<int>& layer_sizes, Rng& rng);

struct MlpGradient {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
};

// Mean over samples and outputs of the squared error. When `grad` is given it
// receives d(loss)/d(parameters). `dropout_masks` (one per hidden layer, same
// shape as that layer's activations) multiplies hidden activations; entries are
// 0 or 1 / (1 - rate).
double mse_loss(const MlpModel& model, const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                MlpGradient* grad = nullptr, const std::vector<Eigen::MatrixXd>* dropout_masks = nullptr);

struct TrainConfig {
  double learning_rate = 1.16e-3;
  double dropout_rate = 0.14;
  int batch_size = 64;
  int max_epochs = 500;
  int patience = 20;
  int n_starts = 4;
  std::uint64_t seed = 1;

  void validate() const;
};

struct EpochRecord {
  int epoch = 0;
  double train_mse = 0.0;
  double val_mse = 0.0;
};

struct StartTrace {
  bool aborted = false;
  int best_epoch = 0;
  double best_val_mse = std::numeric_limits<double>::infinity();
  std::vector<EpochRecord> epochs;
};

struct TrainTrace {
  std::vector<StartTrace> starts;
  int best_start = -1;
};

struct TrainResult {
  MlpModel model;
  TrainTrace trace;
};

// Multi-start Adam training with inverted dropout on hidden layers and early
// stopping on validation MSE. Columns are samples. Returns the start with the
// lowest validation MSE, restored to its best epoch. Throws TrainingFailure if
// every start diverges.
TrainResult mlp_train(const Eigen::MatrixXd& x_train, const Eigen::MatrixXd& y_train, const Eigen::MatrixXd& x_val,
                      const Eigen::MatrixXd& y_val, const std::vector<int>& layer_sizes, const TrainConfig& cfg);

}  // namespace solarcast
