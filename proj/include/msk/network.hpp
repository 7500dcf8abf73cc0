#pragma once

// Convolutional sequence-to-sequence regressor: EMG window -> per-step
// muscle forces and joint angle (normalized target space).

#include "msk/datasets.hpp"
#include "msk/matrix.hpp"
#include "msk/metrics.hpp"
#include "msk/physics.hpp"
#include "msk/tensor.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace msk::net {

enum class LayerKind { ConvBlock, FcBlock, Regression };

std::string to_string(LayerKind kind);
LayerKind parse_layer_kind(const std::string& text);

struct LayerSpec {
  LayerKind kind = LayerKind::FcBlock;
  std::size_t units = 128;  // kernels (conv) or hidden nodes (fc); ignored for regression
  std::size_t kernel = 3;
  std::size_t padding = 3;
  std::size_t stride = 1;
  double dropout = 0.3;

  bool operator==(const LayerSpec&) const = default;
};

/// One conv block, two FC blocks, regression head.
std::vector<LayerSpec> default_architecture();
/// Three conv blocks, three FC blocks, regression head.
std::vector<LayerSpec> deep_architecture();

/// Throws InvalidArgument describing the first bad entry.
void validate_specs(const std::vector<LayerSpec>& specs);

struct Parameter {
  std::string name;
  ad::Shape shape;
  std::vector<double> values;
};

/// Closed-form parameter count for a layer stack.
std::size_t parameter_count(const std::vector<LayerSpec>& specs, std::size_t input_channels, std::size_t outputs);

class NetworkModel {
public:
  NetworkModel() = default;
  NetworkModel(std::vector<LayerSpec> specs, std::size_t input_channels, std::size_t window, std::size_t outputs,
               std::uint64_t seed);

  const std::vector<LayerSpec>& specs() const { return specs_; }
  std::size_t input_channels() const { return input_channels_; }
  std::size_t window() const { return window_; }
  std::size_t outputs() const { return outputs_; }
  std::uint64_t seed() const { return seed_; }

  std::vector<Parameter>& parameters() { return params_; }
  const std::vector<Parameter>& parameters() const { return params_; }
  std::size_t parameter_count() const;

  bool training() const { return training_; }
  void set_training(bool on) { training_ = on; }
  /// Restart the dropout stream.
  void reseed(std::uint64_t seed);

  /// Gradient-tracked leaves holding the current parameter values.
  std::vector<ad::Tensor> bind() const;

  /// input [(1+N_emg) x L] -> output [L x outputs]. Consumes dropout
  /// randomness in training mode.
  ad::Tensor forward(const std::vector<ad::Tensor>& leaves, const ad::Tensor& input);
  ad::Tensor forward(const ad::Tensor& input) { return forward(bind(), input); }

  /// Eval-mode prediction in normalized target space, [L x outputs].
  Matrix predict(const Matrix& input) const;

private:
  std::vector<LayerSpec> specs_;
  std::size_t input_channels_ = 0;
  std::size_t window_ = 0;
  std::size_t outputs_ = 0;
  std::uint64_t seed_ = 0;
  bool training_ = false;
  std::vector<Parameter> params_;
  ad::Rng dropout_rng_;
};

struct SgdmState {
  double learning_rate = 0.01;
  double momentum = 0.9;
  std::vector<std::vector<double>> velocity;
  std::uint64_t iteration = 0;
};

SgdmState make_sgdm(const NetworkModel& model, double learning_rate, double momentum);

/// v <- mu*v - lr*g;  p <- p + v.
void sgdm_step(std::vector<Parameter>& params, const std::vector<std::vector<double>>& grads, SgdmState& state);

struct Schedule {
  std::size_t max_iter = 1200;
  double learning_rate = 0.01;
  double momentum = 0.9;
  std::size_t batch = 1;
  std::uint64_t seed = 0;
};

struct LossConfig {
  metrics::LossWeights weights;
  physics::DynamicsParams dynamics;  // dt is taken from the window set
};

/// Loss of one window under the composite objective. `prediction` is the
/// network output [W x (N+1)] in normalized space.
struct WindowLoss {
  ad::Tensor force;
  ad::Tensor angle;
  ad::Tensor physics;
  ad::Tensor total;
};

WindowLoss window_loss(const ad::Tensor& prediction, const Matrix& targets_physical, const data::NormStats& stats,
                       const LossConfig& config, double dt);

struct TrainResult {
  std::vector<metrics::LossBreakdown> history;
};

/// Called after each iteration (1-based index) with its loss breakdown.
using TrainObserver = std::function<void(std::size_t, const metrics::LossBreakdown&)>;

/// `max_iter` SGDM updates on uniformly sampled single windows. Leaves the
/// model in eval mode.
TrainResult train(NetworkModel& model, const data::WindowSet& windows, const data::NormStats& stats,
                  const LossConfig& loss, const Schedule& schedule, const TrainObserver& observer = {});

} // namespace msk::net
