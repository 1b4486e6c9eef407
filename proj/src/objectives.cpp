#include "olab/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include <json.hpp>

namespace olab {

void Ensemble::check_args(std::size_t worker, const ParamVector& x) const {
  if (worker >= num_workers()) {
    throw std::out_of_range("worker index " + std::to_string(worker) + " out of range (m=" +
                            std::to_string(num_workers()) + ")");
  }
  if (x.size() != dim()) {
    throw DimensionError("objective: expected dimension " + std::to_string(dim()) + ", got " +
                         std::to_string(x.size()));
  }
}

double Ensemble::objective_value(const ParamVector& x) const {
  double total = 0.0;
  for (std::size_t i = 0; i < num_workers(); ++i) total += local_value(i, x);
  return total / static_cast<double>(num_workers());
}

ParamVector Ensemble::global_grad(const ParamVector& x) const {
  ParamVector total(dim(), 0.0);
  for (std::size_t i = 0; i < num_workers(); ++i) axpy_inplace(1.0, local_grad(i, x), total);
  scale_inplace(1.0 / static_cast<double>(num_workers()), total);
  return total;
}

// ---------------------------------------------------------------- quadratic

QuadraticEnsemble::QuadraticEnsemble(std::vector<double> hessian, std::vector<ParamVector> centers,
                                     double sigma, std::uint64_t generator_seed)
    : hessian_(std::move(hessian)),
      centers_(std::move(centers)),
      sigma_(sigma),
      generator_seed_(generator_seed) {
  if (hessian_.empty()) throw std::invalid_argument("quadratic: empty hessian");
  if (centers_.empty()) throw std::invalid_argument("quadratic: no workers");
  for (double a : hessian_) {
    if (!(a > 0.0) || !std::isfinite(a)) throw std::invalid_argument("quadratic: hessian entries must be > 0");
  }
  for (const auto& c : centers_) {
    if (c.size() != hessian_.size()) throw DimensionError("quadratic: center dimension mismatch");
    require_finite(c, "quadratic center");
  }
  if (!(sigma_ >= 0.0)) throw std::invalid_argument("quadratic: sigma must be >= 0");
  center_mean_ = mean_of(centers_);
}

ParamVector QuadraticEnsemble::local_grad(std::size_t worker, const ParamVector& x) const {
  check_args(worker, x);
  const ParamVector& c = centers_[worker];
  ParamVector g(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) g[j] = hessian_[j] * (x[j] - c[j]);
  require_finite(g, "quadratic gradient");
  return g;
}

ParamVector QuadraticEnsemble::stochastic_grad(std::size_t worker, const ParamVector& x,
                                               RngStream& rng) const {
  ParamVector g = local_grad(worker, x);
  if (sigma_ == 0.0) return g;
  const double coord_std = sigma_ / std::sqrt(static_cast<double>(dim()));
  for (std::size_t j = 0; j < g.size(); ++j) g[j] += coord_std * rng.normal();
  return g;
}

double QuadraticEnsemble::local_value(std::size_t worker, const ParamVector& x) const {
  check_args(worker, x);
  const ParamVector& c = centers_[worker];
  double v = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double r = x[j] - c[j];
    v += hessian_[j] * r * r;
  }
  return 0.5 * v;
}

ExactConstants exact_constants(const QuadraticEnsemble& e) {
  const double L = *std::max_element(e.hessian().begin(), e.hessian().end());
  const ParamVector& cbar = e.minimizer();
  double kappa2 = 0.0;
  for (const auto& c : e.centers()) {
    for (std::size_t j = 0; j < c.size(); ++j) {
      const double dev = e.hessian()[j] * (c[j] - cbar[j]);
      kappa2 += dev * dev;
    }
  }
  kappa2 /= static_cast<double>(e.num_workers());
  return {L, kappa2, e.objective_value(cbar)};
}

QuadraticEnsemble make_quadratic(std::size_t m, std::size_t d, double spread, double condition,
                                 double sigma, const RngStream& rng) {
  if (m < 1 || d < 1) throw std::invalid_argument("make_quadratic: m and d must be >= 1");
  if (!(spread >= 0.0)) throw std::invalid_argument("make_quadratic: spread must be >= 0");
  if (!(condition >= 1.0)) throw std::invalid_argument("make_quadratic: condition must be >= 1");
  if (!(sigma >= 0.0)) throw std::invalid_argument("make_quadratic: sigma must be >= 0");

  RngStream h_rng = rng.derive("hessian");
  const double log_cond = std::log(condition);
  std::vector<double> hessian(d);
  for (auto& a : hessian) a = condition == 1.0 ? 1.0 : std::exp(h_rng.uniform() * log_cond);

  std::vector<ParamVector> centers;
  centers.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    RngStream c_rng = rng.split(i, m, "center");
    ParamVector c(d);
    for (std::size_t j = 0; j < d; ++j) c[j] = spread * c_rng.normal();
    centers.push_back(std::move(c));
  }
  return QuadraticEnsemble(std::move(hessian), std::move(centers), sigma, rng.seed());
}

void to_json(nlohmann::json& j, const QuadraticEnsemble& e) {
  nlohmann::json centers = nlohmann::json::array();
  for (const auto& c : e.centers()) centers.push_back(c.values());
  j = nlohmann::json{{"type", "quadratic"},
                     {"hessian", e.hessian()},
                     {"centers", std::move(centers)},
                     {"sigma", e.sigma()},
                     {"generator_seed", e.generator_seed()}};
}

QuadraticEnsemble quadratic_from_json(const nlohmann::json& j) {
  std::vector<ParamVector> centers;
  for (const auto& c : j.at("centers")) centers.emplace_back(c.get<std::vector<double>>());
  return QuadraticEnsemble(j.at("hessian").get<std::vector<double>>(), std::move(centers),
                           j.at("sigma").get<double>(), j.value("generator_seed", std::uint64_t{0}));
}

// ----------------------------------------------------------------- logistic

namespace {

// log(1 + exp(t)) without overflow.
double softplus(double t) {
  return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
}

double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

}  // namespace

LogisticEnsemble::LogisticEnsemble(std::vector<std::vector<LabeledSample>> data, double lambda,
                                   std::size_t batch)
    : data_(std::move(data)), lambda_(lambda), batch_(batch), dim_(0) {
  if (data_.empty()) throw std::invalid_argument("logistic: no workers");
  if (!(lambda_ > 0.0)) throw std::invalid_argument("logistic: lambda must be > 0");
  if (batch_ < 1) throw std::invalid_argument("logistic: batch must be >= 1");
  for (const auto& worker : data_) {
    if (worker.empty()) throw std::invalid_argument("logistic: a worker has no samples");
    for (const auto& s : worker) {
      if (dim_ == 0) dim_ = s.features.size();
      if (s.features.size() != dim_ || dim_ == 0) throw DimensionError("logistic: feature dimension mismatch");
      if (s.label != 1 && s.label != -1) throw std::invalid_argument("logistic: labels must be +-1");
    }
  }
}

void LogisticEnsemble::accumulate_sample_grad(const LabeledSample& s, const ParamVector& x, double weight,
                                              ParamVector& out) const {
  const double margin = s.label * dot(s.features, x);
  // d/dx log(1 + exp(-y f.x)) = -y sigmoid(-y f.x) f
  const double coeff = -weight * s.label * sigmoid(-margin);
  for (std::size_t j = 0; j < dim_; ++j) out[j] += coeff * s.features[j];
}

ParamVector LogisticEnsemble::local_grad(std::size_t worker, const ParamVector& x) const {
  check_args(worker, x);
  const auto& samples = data_[worker];
  ParamVector g(dim_, 0.0);
  const double w = 1.0 / static_cast<double>(samples.size());
  for (const auto& s : samples) accumulate_sample_grad(s, x, w, g);
  axpy_inplace(lambda_, x, g);
  return g;
}

ParamVector LogisticEnsemble::stochastic_grad(std::size_t worker, const ParamVector& x, RngStream& rng) const {
  check_args(worker, x);
  const auto& samples = data_[worker];
  ParamVector g(dim_, 0.0);
  const double w = 1.0 / static_cast<double>(batch_);
  for (std::size_t b = 0; b < batch_; ++b) accumulate_sample_grad(samples[rng.below(samples.size())], x, w, g);
  axpy_inplace(lambda_, x, g);
  return g;
}

double LogisticEnsemble::local_value(std::size_t worker, const ParamVector& x) const {
  check_args(worker, x);
  const auto& samples = data_[worker];
  double loss = 0.0;
  for (const auto& s : samples) loss += softplus(-s.label * dot(s.features, x));
  return loss / static_cast<double>(samples.size()) + 0.5 * lambda_ * norm_sq(x);
}

double LogisticEnsemble::smoothness_upper_bound() const {
  double max_sq = 0.0;
  for (const auto& worker : data_) {
    for (const auto& s : worker) max_sq = std::max(max_sq, norm_sq(s.features));
  }
  return lambda_ + max_sq / 4.0;
}

EstimatedConstants estimated_constants(const LogisticEnsemble& ensemble, double best_observed_value) {
  return {ensemble.smoothness_upper_bound(), std::nullopt, best_observed_value, true};
}

int ClassificationPool::binary_label(std::size_t sample) const {
  return static_cast<std::size_t>(classes.at(sample)) < (num_classes + 1) / 2 ? 1 : -1;
}

ClassificationPool make_classification(std::size_t n, std::size_t d, std::size_t num_classes,
                                       double separation, const RngStream& rng) {
  if (d < 2) throw std::invalid_argument("make_classification: d must be >= 2 (bias coordinate)");
  if (num_classes < 2) throw std::invalid_argument("make_classification: need >= 2 classes");
  RngStream mean_rng = rng.derive("class-means");
  std::vector<ParamVector> means(num_classes, ParamVector(d - 1));
  for (auto& mu : means) {
    for (std::size_t j = 0; j + 1 < d; ++j) mu[j] = separation * mean_rng.normal();
  }
  RngStream sample_rng = rng.derive("samples");
  ClassificationPool pool;
  pool.num_classes = num_classes;
  pool.features.reserve(n);
  pool.classes.reserve(n);
  for (std::size_t s = 0; s < n; ++s) {
    const std::size_t c = s % num_classes;  // balanced labels
    ParamVector f(d);
    for (std::size_t j = 0; j + 1 < d; ++j) f[j] = means[c][j] + sample_rng.normal();
    f[d - 1] = 1.0;
    pool.features.push_back(std::move(f));
    pool.classes.push_back(static_cast<int>(c));
  }
  return pool;
}

}  // namespace olab
