#include "msk/network.hpp"

#include "msk/error.hpp"
#include "msk/random.hpp"

#include <cmath>
#include <sstream>

namespace msk::net {

namespace {

constexpr std::uint64_t kDropoutStream = 0x64726f70ULL;
constexpr std::uint64_t kInitStream = 0x696e6974ULL;
constexpr std::uint64_t kSampleStream = 0x73616d70ULL;

std::vector<double> glorot(std::size_t count, std::size_t fan_in, std::size_t fan_out, ad::Rng& rng) {
  const double s = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::vector<double> v(count);
  for (auto& x : v)
    x = uniform(rng, -s, s);
  return v;
}

} // namespace

std::string to_string(LayerKind kind) {
  switch (kind) {
  case LayerKind::ConvBlock:
    return "conv";
  case LayerKind::FcBlock:
    return "fc";
  case LayerKind::Regression:
    return "regression";
  }
  return "?";
}

LayerKind parse_layer_kind(const std::string& text) {
  if (text == "conv")
    return LayerKind::ConvBlock;
  if (text == "fc")
    return LayerKind::FcBlock;
  if (text == "regression")
    return LayerKind::Regression;
  throw InvalidArgument("unknown layer kind '" + text + "' (expected conv, fc or regression)");
}

std::vector<LayerSpec> default_architecture() {
  return {
      {LayerKind::ConvBlock, 128, 3, 3, 1, 0.3},
      {LayerKind::FcBlock, 128, 1, 0, 1, 0.3},
      {LayerKind::FcBlock, 128, 1, 0, 1, 0.3},
      {LayerKind::Regression, 0, 1, 0, 1, 0.0},
  };
}

std::vector<LayerSpec> deep_architecture() {
  std::vector<LayerSpec> s;
  for (int i = 0; i < 3; ++i)
    s.push_back({LayerKind::ConvBlock, 128, 3, 3, 1, 0.3});
  for (int i = 0; i < 3; ++i)
    s.push_back({LayerKind::FcBlock, 128, 1, 0, 1, 0.3});
  s.push_back({LayerKind::Regression, 0, 1, 0, 1, 0.0});
  return s;
}

void validate_specs(const std::vector<LayerSpec>& specs) {
  if (specs.empty() || specs.back().kind != LayerKind::Regression)
    throw InvalidArgument("network: the last layer must be the regression head");
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const auto& s = specs[i];
    const std::string where = "network: layer " + std::to_string(i) + " (" + to_string(s.kind) + "): ";
    if (s.kind == LayerKind::Regression) {
      if (i + 1 != specs.size())
        throw InvalidArgument(where + "regression head must be last and unique");
      continue;
    }
    if (s.units == 0)
      throw InvalidArgument(where + "units must be positive");
    if (!(s.dropout >= 0.0 && s.dropout < 1.0))
      throw InvalidArgument(where + "dropout must lie in [0, 1)");
    if (s.kind == LayerKind::ConvBlock) {
      if (s.kernel == 0 || s.stride != 1)
        throw InvalidArgument(where + "kernel must be positive and stride 1");
      if (s.kernel > 2 * s.padding + 1)
        throw InvalidArgument(where + "kernel larger than 2*padding+1 would shorten the sequence");
    }
  }
}

std::size_t parameter_count(const std::vector<LayerSpec>& specs, std::size_t input_channels, std::size_t outputs) {
  validate_specs(specs);
  std::size_t count = 0;
  std::size_t width = input_channels;
  for (const auto& s : specs) {
    switch (s.kind) {
    case LayerKind::ConvBlock:
      count += s.units * width * s.kernel + 3 * s.units;  // kernels, bias, gain, shift
      width = s.units;
      break;
    case LayerKind::FcBlock:
      count += s.units * width + 3 * s.units;
      width = s.units;
      break;
    case LayerKind::Regression:
      count += outputs * width + outputs;
      break;
    }
  }
  return count;
}

// ---------------------------------------------------------------------------

NetworkModel::NetworkModel(std::vector<LayerSpec> specs, std::size_t input_channels, std::size_t window,
                           std::size_t outputs, std::uint64_t seed)
    : specs_(std::move(specs)), input_channels_(input_channels), window_(window), outputs_(outputs), seed_(seed) {
  validate_specs(specs_);
  if (input_channels_ == 0 || outputs_ == 0)
    throw InvalidArgument("network: input channels and outputs must be positive");
  if (window_ < 3)
    throw InvalidArgument("network: window length must be >= 3");
  ad::Rng rng(derive_seed(seed_, {kInitStream}));
  std::size_t width = input_channels_;
  for (std::size_t i = 0; i < specs_.size(); ++i) {
    const auto& s = specs_[i];
    const std::string p = "layer" + std::to_string(i) + ".";
    if (s.kind == LayerKind::ConvBlock) {
      params_.push_back({p + "kernels", {s.units, width, s.kernel},
                         glorot(s.units * width * s.kernel, width * s.kernel, s.units * s.kernel, rng)});
    } else if (s.kind == LayerKind::FcBlock) {
      params_.push_back({p + "weights", {s.units, width}, glorot(s.units * width, width, s.units, rng)});
    } else {
      params_.push_back({p + "weights", {outputs_, width}, glorot(outputs_ * width, width, outputs_, rng)});
      params_.push_back({p + "bias", {outputs_}, std::vector<double>(outputs_, 0.0)});
      break;
    }
    params_.push_back({p + "bias", {s.units}, std::vector<double>(s.units, 0.0)});
    params_.push_back({p + "gain", {s.units}, std::vector<double>(s.units, 1.0)});
    params_.push_back({p + "shift", {s.units}, std::vector<double>(s.units, 0.0)});
    width = s.units;
  }
  reseed(seed_);
}

std::size_t NetworkModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_)
    n += p.values.size();
  return n;
}

void NetworkModel::reseed(std::uint64_t seed) { dropout_rng_.seed(derive_seed(seed, {kDropoutStream})); }

std::vector<ad::Tensor> NetworkModel::bind() const {
  std::vector<ad::Tensor> leaves;
  leaves.reserve(params_.size());
  for (const auto& p : params_)
    leaves.push_back(ad::Tensor::parameter(p.shape, p.values));
  return leaves;
}

namespace {

ad::Tensor run_layers(const std::vector<LayerSpec>& specs, const std::vector<ad::Tensor>& leaves, ad::Tensor x,
                      bool training, ad::Rng& rng) {
  const std::size_t len = x.dim(1);
  std::size_t p = 0;
  for (const auto& s : specs) {
    if (s.kind == LayerKind::ConvBlock) {
      auto y = ad::conv1d(x, leaves[p], leaves[p + 1], s.padding, s.stride);
      const std::size_t extra = y.dim(1) - len;  // >= 0 by validate_specs
      y = ad::slice_cols(y, extra / 2, extra / 2 + len);
      y = ad::relu(y);
      y = ad::seq_norm(y, leaves[p + 2], leaves[p + 3]);
      x = ad::dropout(y, s.dropout, training, rng);
      p += 4;
    } else if (s.kind == LayerKind::FcBlock) {
      auto y = ad::relu(ad::dense(x, leaves[p], leaves[p + 1]));
      y = ad::feature_norm(y, leaves[p + 2], leaves[p + 3]);
      x = ad::dropout(y, s.dropout, training, rng);
      p += 4;
    } else {
      x = ad::transpose(ad::dense(x, leaves[p], leaves[p + 1]));
    }
  }
  return x;
}

} // namespace

ad::Tensor NetworkModel::forward(const std::vector<ad::Tensor>& leaves, const ad::Tensor& input) {
  if (input.rank() != 2 || input.dim(0) != input_channels_)
    throw ShapeError("network forward: expected input [" + std::to_string(input_channels_) + " x L], got " +
                     ad::shape_str(input.shape()));
  if (input.dim(1) < 3)
    throw ShapeError("network forward: window length must be >= 3");
  if (leaves.size() != params_.size())
    throw ShapeError("network forward: expected " + std::to_string(params_.size()) + " parameter tensors");
  return run_layers(specs_, leaves, input, training_, dropout_rng_);
}

Matrix NetworkModel::predict(const Matrix& input) const {
  std::vector<ad::Tensor> leaves;
  leaves.reserve(params_.size());
  for (const auto& p : params_)
    leaves.push_back(ad::Tensor::constant(p.shape, p.values));
  if (input.rows != input_channels_)
    throw ShapeError("network predict: expected " + std::to_string(input_channels_) + " input channels, got " +
                     std::to_string(input.rows));
  ad::Rng unused;
  auto out = run_layers(specs_, leaves, ad::Tensor::constant({input.rows, input.cols}, input.data), false, unused);
  Matrix m(out.dim(0), out.dim(1));
  std::copy(out.values().begin(), out.values().end(), m.data.begin());
  return m;
}

// ---------------------------------------------------------------------------

SgdmState make_sgdm(const NetworkModel& model, double learning_rate, double momentum) {
  if (!(learning_rate > 0.0) || !(momentum >= 0.0 && momentum < 1.0))
    throw InvalidArgument("sgdm: learning rate must be > 0 and momentum in [0, 1)");
  SgdmState st;
  st.learning_rate = learning_rate;
  st.momentum = momentum;
  for (const auto& p : model.parameters())
    st.velocity.emplace_back(p.values.size(), 0.0);
  return st;
}

void sgdm_step(std::vector<Parameter>& params, const std::vector<std::vector<double>>& grads, SgdmState& state) {
  if (grads.size() != params.size() || state.velocity.size() != params.size())
    throw ShapeError("sgdm_step: gradient / velocity count does not match parameter count");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (grads[i].size() != params[i].values.size() || state.velocity[i].size() != params[i].values.size())
      throw ShapeError("sgdm_step: gradient for '" + params[i].name + "' has wrong size");
    for (double g : grads[i])
      if (!std::isfinite(g))
        throw NumericError("sgdm_step: non-finite gradient in parameter '" + params[i].name + "'");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& v = state.velocity[i];
    auto& p = params[i].values;
    for (std::size_t j = 0; j < p.size(); ++j) {
      v[j] = state.momentum * v[j] - state.learning_rate * grads[i][j];
      p[j] += v[j];
    }
  }
  ++state.iteration;
}

WindowLoss window_loss(const ad::Tensor& prediction, const Matrix& targets_physical, const data::NormStats& stats,
                       const LossConfig& config, double dt) {
  const std::size_t w = targets_physical.rows;
  const std::size_t outputs = targets_physical.cols;
  if (prediction.rank() != 2 || prediction.dim(0) != w || prediction.dim(1) != outputs)
    throw ShapeError("window_loss: prediction " + ad::shape_str(prediction.shape()) + " does not match targets [" +
                     std::to_string(w) + " x " + std::to_string(outputs) + "]");
  const std::size_t n = outputs - 1;
  const Matrix z = data::normalize(targets_physical, stats);
  auto target = ad::Tensor::constant({w, outputs}, z.data);

  WindowLoss l;
  l.force = metrics::mse_force(ad::slice_cols(target, 0, n), ad::slice_cols(prediction, 0, n));
  l.angle = metrics::mse_angle(ad::column(target, n), ad::column(prediction, n));

  auto physical = ad::column_affine(prediction, stats.stddev, stats.mean);
  auto params = config.dynamics;
  params.dt = dt;
  l.physics = physics::physics_loss(ad::column(physical, n), ad::slice_cols(physical, 0, n), params);
  l.total = metrics::weighted_total(l.force, l.angle, l.physics, config.weights);
  return l;
}

TrainResult train(NetworkModel& model, const data::WindowSet& windows, const data::NormStats& stats,
                  const LossConfig& loss, const Schedule& schedule, const TrainObserver& observer) {
  if (windows.empty())
    throw InvalidArgument("train: no training windows");
  if (windows.window() < 3)
    throw InvalidArgument("train: window length must be >= 3");
  if (schedule.batch < 1)
    throw InvalidArgument("train: batch size must be >= 1");
  if (windows.input_channels() != model.input_channels() || windows.outputs() != model.outputs())
    throw ShapeError("train: dataset channels/outputs do not match the model");
  if (loss.dynamics.muscles() != model.outputs() - 1)
    throw ShapeError("train: dynamics lists " + std::to_string(loss.dynamics.muscles()) + " moment arms for " +
                     std::to_string(model.outputs() - 1) + " predicted muscles");
  loss.weights.validate();

  TrainResult result;
  result.history.reserve(schedule.max_iter);
  if (schedule.max_iter == 0) {
    model.set_training(false);
    return result;
  }
  auto state = make_sgdm(model, schedule.learning_rate, schedule.momentum);
  ad::Rng sampler(derive_seed(schedule.seed, {kSampleStream}));
  model.reseed(derive_seed(schedule.seed, {kDropoutStream}));
  model.set_training(true);

  const double inv_batch = 1.0 / static_cast<double>(schedule.batch);
  for (std::size_t it = 1; it <= schedule.max_iter; ++it) {
    std::vector<std::vector<double>> grads(model.parameters().size());
    for (std::size_t i = 0; i < grads.size(); ++i)
      grads[i].assign(model.parameters()[i].values.size(), 0.0);
    metrics::LossBreakdown rec{0.0, 0.0, 0.0, loss.weights, 0.0};
    try {
      for (std::size_t b = 0; b < schedule.batch; ++b) {
        const auto idx = static_cast<std::size_t>(ad::uniform01(sampler) * static_cast<double>(windows.size()));
        const Matrix in = windows.input(idx);
        auto leaves = model.bind();
        auto out = model.forward(leaves, ad::Tensor::constant({in.rows, in.cols}, in.data));
        auto l = window_loss(out, windows.targets(idx), stats, loss, windows.dt());
        auto bd = metrics::total_loss(l.force.item(), l.angle.item(), l.physics.item(), loss.weights);
        rec.force += bd.force * inv_batch;
        rec.angle += bd.angle * inv_batch;
        rec.physics += bd.physics * inv_batch;
        rec.total += bd.total * inv_batch;
        auto g = ad::backward(l.total);
        for (std::size_t i = 0; i < leaves.size(); ++i) {
          auto gi = g.of(leaves[i]);
          for (std::size_t j = 0; j < gi.size(); ++j)
            grads[i][j] += gi[j] * inv_batch;
        }
      }
      sgdm_step(model.parameters(), grads, state);
    } catch (const NumericError& e) {
      model.set_training(false);
      std::ostringstream os;
      os << "train: diverged at iteration " << it << " (last finite iteration " << it - 1 << "): " << e.what();
      throw NumericError(os.str());
    }
    result.history.push_back(rec);
    if (observer)
      observer(it, rec);
  }
  model.set_training(false);
  return result;
}

} // namespace msk::net
