#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "irsim/rng.hpp"

namespace irsim::nn {

enum class Activation { kRelu, kTanh };

struct LayerSpec {
  enum class Kind { kDense, kBatchNorm, kActivation };
  Kind kind = Kind::kDense;
  int in = 0;
  int out = 0;       // width for batch-norm layers
  int norm_width = 0;  // batch-norm: leading features normalized; rest pass
  Activation act = Activation::kRelu;

  static LayerSpec dense(int in, int out) {
    return {Kind::kDense, in, out, 0, Activation::kRelu};
  }
  static LayerSpec batch_norm(int width) {
    return {Kind::kBatchNorm, width, width, width, Activation::kRelu};
  }
  // Normalizes the first norm_width features and passes the remaining
  // width - norm_width through untouched.
  static LayerSpec partial_batch_norm(int width, int norm_width) {
    return {Kind::kBatchNorm, width, width, norm_width, Activation::kRelu};
  }
  static LayerSpec activation(Activation act) {
    return {Kind::kActivation, 0, 0, 0, act};
  }
};

// Sequential net description. The two fixed topologies: the actor ends in
// a batch-norm feeding the tanh output layer so actions stay in range;
// the critic batch-normalizes the state block of its (state, action)
// input before the hidden stack. The action block joins un-normalized:
// batch statistics over the action would make train-mode Q invariant to
// a batch-uniform action shift, zeroing the policy-gradient signal.
struct NetSpec {
  int input_width = 0;
  std::vector<LayerSpec> layers;

  int output_width() const;
  void check() const;  // throws on inconsistent widths

  static NetSpec actor(int state_dim, int action_dim, int hidden1,
                       int hidden2);
  static NetSpec critic(int state_dim, int action_dim, int hidden1,
                        int hidden2);
};

inline constexpr double kBnEpsilon = 1e-5;
inline constexpr double kBnMomentum = 0.99;

struct Layer {
  LayerSpec spec;
  Eigen::MatrixXd w;  // in x out
  Eigen::RowVectorXd b;
  Eigen::RowVectorXd gamma, beta, run_mean, run_var;
};

struct LayerGrads {
  Eigen::MatrixXd dw;
  Eigen::RowVectorXd db, dgamma, dbeta;
};
using Grads = std::vector<LayerGrads>;

enum class ForwardMode { kTrain, kEval };

// Intermediates retained by a train-mode forward for the backward pass.
struct ForwardCache {
  ForwardMode mode = ForwardMode::kTrain;
  std::vector<Eigen::MatrixXd> inputs;       // per layer
  std::vector<Eigen::MatrixXd> bn_xhat;      // per layer, BN only
  std::vector<Eigen::RowVectorXd> bn_inv_std;
};

// Batches are row-per-sample. Train mode normalizes with batch statistics
// and (optionally) folds them into the running estimates; eval mode uses
// the running estimates and needs no cache.
class Net {
 public:
  Net() = default;
  explicit Net(NetSpec spec);

  // Uniform(-1/sqrt(fan_in)) everywhere except the final dense layer,
  // which starts near zero so initial actions/values are small.
  void init_params(RngStream& rng);

  Eigen::MatrixXd forward(const Eigen::MatrixXd& input, ForwardMode mode,
                          ForwardCache* cache = nullptr,
                          bool update_running_stats = true);

  // Exact gradients of the train-mode forward map. Returns the input
  // gradient; fills `grads` when non-null. The cache must come from a
  // train-mode forward on this net.
  Eigen::MatrixXd backward(const ForwardCache& cache,
                           const Eigen::MatrixXd& output_grad,
                           Grads* grads) const;

  const NetSpec& spec() const { return spec_; }
  std::vector<Layer>& layers() { return layers_; }
  const std::vector<Layer>& layers() const { return layers_; }

  nlohmann::json to_json() const;
  static Net from_json(const nlohmann::json& j);

  bool operator==(const Net& other) const;

 private:
  NetSpec spec_;
  std::vector<Layer> layers_;
};

struct AdamState {
  std::vector<LayerGrads> m;  // same shapes as the gradients
  std::vector<LayerGrads> v;
  long step_count = 0;

  static AdamState zeros_like(const Net& net);
  nlohmann::json to_json() const;
  static AdamState from_json(const nlohmann::json& j);
};

inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEpsilon = 1e-8;

// Bias-corrected Adam over every trainable tensor in the net.
void adam_step(Net& net, const Grads& grads, AdamState& state, double lr);

// target <- (1 - tau) * target + tau * online, including BN running stats.
void soft_update(Net& target, const Net& online, double tau);

}  // namespace irsim::nn
