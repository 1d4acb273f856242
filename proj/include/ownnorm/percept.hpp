#pragma once

// Per-agent kernel logistic regression over perceptual features (position,
// color, interaction recency), trained on fractional ownership targets.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "object_state.hpp"

namespace ownnorm {

inline constexpr double kDefaultOwnershipPrior = 0.5;

// Where a training target came from. Only explicit claims may train the
// percept model; inferred ownership never feeds back into it.
enum class Provenance { claim, percept_prediction, rule_inference };

struct KlrConfig {
  double gamma = 1.0;
  double lambda = 0.01;
  std::size_t max_iterations = 500;
  double gradient_tolerance = 1e-6;
  double recency_horizon = 1e4;  // seconds
};

struct FeatureStats {
  std::array<double, 3> position_mean{};
  std::array<double, 3> position_scale{1.0, 1.0, 1.0};
  double recency_mean = 0.0;
  double recency_scale = 1.0;
  double clock = 0.0;
  double horizon = 1e4;
  std::vector<std::string> palette;
};

using FeatureVector = std::vector<double>;

// log(1 + seconds since the agent last touched the object), capped at the
// horizon; never-touched objects sit at the cap.
inline double raw_recency(const ObjectState& obj, const std::string& agent, double clock,
                          double horizon) {
  double gap = horizon;
  if (auto it = obj.last_interaction.find(agent); it != obj.last_interaction.end())
    gap = std::clamp(clock - it->second, 0.0, horizon);
  return std::log1p(gap);
}

inline FeatureStats compute_feature_stats(std::span<const ObjectState> training,
                                          const std::string& agent, double clock,
                                          std::vector<std::string> palette,
                                          double horizon = 1e4) {
  FeatureStats s;
  s.clock = clock;
  s.horizon = horizon;
  s.palette = std::move(palette);
  const double n = static_cast<double>(training.size());
  if (training.empty()) return s;
  auto scale_of = [](double var) { return var > 1e-18 ? std::sqrt(var) : 1.0; };
  for (int d = 0; d < 3; ++d) {
    double mean = 0.0, var = 0.0;
    for (const auto& o : training) mean += o.position[d];
    mean /= n;
    for (const auto& o : training) var += (o.position[d] - mean) * (o.position[d] - mean);
    s.position_mean[d] = mean;
    s.position_scale[d] = scale_of(var / n);
  }
  double mean = 0.0, var = 0.0;
  for (const auto& o : training) mean += raw_recency(o, agent, clock, horizon);
  mean /= n;
  for (const auto& o : training) {
    double r = raw_recency(o, agent, clock, horizon) - mean;
    var += r * r;
  }
  s.recency_mean = mean;
  s.recency_scale = scale_of(var / n);
  return s;
}

inline FeatureVector featurize(const ObjectState& obj, const std::string& agent,
                               const FeatureStats& stats) {
  FeatureVector x;
  x.reserve(4 + stats.palette.size());
  for (int d = 0; d < 3; ++d)
    x.push_back((obj.position[d] - stats.position_mean[d]) / stats.position_scale[d]);
  for (const auto& c : stats.palette) x.push_back(obj.color == c ? 1.0 : 0.0);
  x.push_back((raw_recency(obj, agent, stats.clock, stats.horizon) - stats.recency_mean) /
              stats.recency_scale);
  return x;
}

inline double rbf_kernel(const FeatureVector& a, const FeatureVector& b, double gamma) {
  double d2 = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d2 += (a[i] - b[i]) * (a[i] - b[i]);
  return std::exp(-gamma * d2);
}

inline double sigmoid(double z) {
  return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

inline double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

struct TrainingPoint {
  ObjectState object;
  double target = 0.0;
  Provenance source = Provenance::claim;
};

class KlrModel {
 public:
  KlrModel() = default;

  // Full-batch gradient descent from w = 0 with a fixed step of 1/L, where L
  // bounds the Lipschitz constant of the gradient; the loss never increases.
  static KlrModel train(const std::string& agent, std::span<const TrainingPoint> data, double clock,
                        std::vector<std::string> palette, const KlrConfig& config = {}) {
    if (data.empty()) throw std::invalid_argument("KLR training needs at least one point");
    KlrModel m;
    m.agent_ = agent;
    m.config_ = config;
    std::vector<ObjectState> objs;
    for (const auto& p : data) {
      if (p.source != Provenance::claim)
        throw std::invalid_argument("percept model trains on claims only");
      if (!(p.target >= 0.0 && p.target <= 1.0))
        throw std::invalid_argument("KLR target outside [0,1]");
      objs.push_back(p.object);
      m.targets_.push_back(p.target);
      m.sources_.push_back(p.source);
    }
    m.stats_ = compute_feature_stats(objs, agent, clock, std::move(palette), config.recency_horizon);
    for (const auto& o : objs) m.points_.push_back(featurize(o, agent, m.stats_));
    const std::size_t n = m.points_.size();
    m.kernel_.assign(n * n, 0.0);
    double max_row = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double row = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        m.kernel_[i * n + j] = rbf_kernel(m.points_[i], m.points_[j], config.gamma);
        row += m.kernel_[i * n + j];
      }
      max_row = std::max(max_row, row);
    }
    const double lipschitz = max_row * max_row / (4.0 * static_cast<double>(n)) + config.lambda * max_row;
    const double step = 1.0 / lipschitz;

    m.weights_.assign(n, 0.0);
    m.loss_history_.push_back(m.loss(m.weights_));
    for (std::size_t it = 0; it < config.max_iterations; ++it) {
      auto g = m.gradient(m.weights_);
      double norm = 0.0;
      for (double v : g) norm += v * v;
      if (std::sqrt(norm) <= config.gradient_tolerance) break;
      for (std::size_t i = 0; i < n; ++i) m.weights_[i] -= step * g[i];
      m.loss_history_.push_back(m.loss(m.weights_));
    }
    return m;
  }

  // Mean cross-entropy against the fractional targets plus (lambda/2) w'Kw.
  double loss(std::span<const double> w) const {
    const std::size_t n = points_.size();
    auto f = scores(w);
    double ce = 0.0, reg = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      ce += softplus(f[i]) - targets_[i] * f[i];
      reg += w[i] * f[i];
    }
    return ce / static_cast<double>(n) + 0.5 * config_.lambda * reg;
  }

  std::vector<double> gradient(std::span<const double> w) const {
    const std::size_t n = points_.size();
    auto f = scores(w);
    std::vector<double> residual(n);
    for (std::size_t i = 0; i < n; ++i)
      residual[i] = (sigmoid(f[i]) - targets_[i]) / static_cast<double>(n) + config_.lambda * w[i];
    std::vector<double> g(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) g[i] += kernel_[i * n + j] * residual[j];
    return g;
  }

  double predict(const FeatureVector& x) const {
    if (points_.empty()) return kDefaultOwnershipPrior;
    double z = 0.0;
    for (std::size_t j = 0; j < points_.size(); ++j)
      z += weights_[j] * rbf_kernel(x, points_[j], config_.gamma);
    return sigmoid(z);
  }

  double predict(const ObjectState& obj) const {
    if (points_.empty()) return kDefaultOwnershipPrior;
    return predict(featurize(obj, agent_, stats_));
  }

  bool trained() const { return !points_.empty(); }
  const std::string& agent() const { return agent_; }
  const std::vector<FeatureVector>& training_points() const { return points_; }
  const std::vector<double>& targets() const { return targets_; }
  const std::vector<Provenance>& sources() const { return sources_; }
  const std::vector<double>& weights() const { return weights_; }
  const std::vector<double>& loss_history() const { return loss_history_; }
  const FeatureStats& stats() const { return stats_; }
  const KlrConfig& config() const { return config_; }

 private:
  std::vector<double> scores(std::span<const double> w) const {
    const std::size_t n = points_.size();
    std::vector<double> f(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) f[i] += kernel_[i * n + j] * w[j];
    return f;
  }

  std::string agent_;
  KlrConfig config_;
  FeatureStats stats_;
  std::vector<FeatureVector> points_;
  std::vector<double> targets_;
  std::vector<Provenance> sources_;
  std::vector<double> kernel_;
  std::vector<double> weights_;
  std::vector<double> loss_history_;
};

}  // namespace ownnorm
