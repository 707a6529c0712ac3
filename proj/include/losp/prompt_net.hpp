#pragma once

#include "losp/hankel.hpp"
#include "losp/label_oracle.hpp"
#include "losp/types.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace losp {

/// 1D residual CNN: stem conv + ReLU, `blocks` residual blocks
/// (y = ReLU(x + conv(ReLU(conv(x))))), global average pooling, then
/// FC(filters→fc1) ReLU, FC(fc1→fc2) ReLU, FC(fc2→1).
struct NetArchitecture
{
  int n_shots = 2;
  int length = 64;
  int filters = 16;
  int kernel = 3;  ///< odd; "same" padding
  int blocks = 4;
  int fc1 = 32;
  int fc2 = 16;

  int in_channels() const { return 2 * n_shots; }
  std::size_t param_count() const;
  void validate() const;
  bool operator==(NetArchitecture const &) const = default;
};

struct PromptNetWeights
{
  static constexpr std::uint32_t kVersion = 1;

  NetArchitecture arch;
  /// Conv kernels are stored [out][in][tap], FC matrices [out][in], each followed by its biases.
  Eigen::VectorXd params;
};

/// He-initialized weights (zero biases), deterministic in seed.
PromptNetWeights init_weights(NetArchitecture const &arch, std::uint64_t seed);

/// 2J x L real tensor: rows (Re s_1, Im s_1, Re s_2, ...).
Eigen::MatrixXd featurize(HybridLine const &line);
Eigen::MatrixXd featurize(ShotSignals const &signals);
ShotSignals unfeaturize(Eigen::MatrixXd const &features);

/// Raw regression outputs, one per feature tensor.
Eigen::VectorXd forward(PromptNetWeights const &weights, std::span<Eigen::MatrixXd const> inputs);
double predict_raw(PromptNetWeights const &weights, HybridLine const &line);

/// Rounds a raw output to the nearest integer and clamps to [1, r_max].
int clamp_rank(double raw, int r_max);
int predict_rank(PromptNetWeights const &weights, HybridLine const &line, HankelSpec const &spec);
/// Batched predict_rank over many lines (parallel, identical to the per-line call).
std::vector<int> predict_ranks(PromptNetWeights const &weights, std::span<HybridLine const> lines,
                               HankelSpec const &spec);

struct LossGradient
{
  double loss = 0;
  Eigen::VectorXd gradient;
};

/// Mean squared error against targets and its gradient w.r.t. params.
LossGradient loss_and_gradient(PromptNetWeights const &weights, std::span<Eigen::MatrixXd const> inputs,
                               Eigen::VectorXd const &targets);

struct TrainConfig
{
  int epochs = 40;
  double learning_rate = 1e-3;
  double decay = 0.9;
  int decay_every = 50;
  int batch_size = 64;
  double train_fraction = 0.9;
  std::uint64_t seed = 0;
  int filters = 16;
  int blocks = 4;

  void validate() const;
};

struct TrainHistory
{
  std::vector<double> train_loss;
  std::vector<double> val_loss;
  /// Dataset indices of the held-out validation split.
  std::vector<std::size_t> val_indices;
};

struct TrainResult
{
  PromptNetWeights weights;
  TrainHistory history;
};

/// Adam on the MSE between raw outputs and oracle labels. The returned weights are
/// rounded to float32 so they survive save/load unchanged.
TrainResult train(LabeledDataset const &dataset, TrainConfig const &config);

void save_weights(PromptNetWeights const &weights, std::filesystem::path const &path);
PromptNetWeights load_weights(std::filesystem::path const &path);

} // namespace losp
