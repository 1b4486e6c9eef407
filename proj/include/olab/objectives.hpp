#pragma once

// Synthetic local objectives F_i with exact gradient oracles.

#include <cstdint>
#include <optional>
#include <vector>

#include <json.hpp>

#include "olab/core.hpp"

namespace olab {

/// Common interface of a family of m local objectives over R^d.
class Ensemble {
 public:
  virtual ~Ensemble() = default;

  virtual std::size_t num_workers() const noexcept = 0;
  virtual std::size_t dim() const noexcept = 0;

  /// Exact gradient of F_i.
  virtual ParamVector local_grad(std::size_t worker, const ParamVector& x) const = 0;
  /// Unbiased stochastic gradient of F_i; consumes draws from rng.
  virtual ParamVector stochastic_grad(std::size_t worker, const ParamVector& x, RngStream& rng) const = 0;
  virtual double local_value(std::size_t worker, const ParamVector& x) const = 0;

  /// F = (1/m) sum_i F_i
  double objective_value(const ParamVector& x) const;
  ParamVector global_grad(const ParamVector& x) const;

 protected:
  void check_args(std::size_t worker, const ParamVector& x) const;
};

/// F_i(x) = 1/2 (x - c_i)^T A (x - c_i) with a shared positive diagonal A.
/// Stochastic gradients add N(0, sigma^2/d) per coordinate, so E||noise||^2 = sigma^2.
class QuadraticEnsemble final : public Ensemble {
 public:
  QuadraticEnsemble(std::vector<double> hessian, std::vector<ParamVector> centers, double sigma,
                    std::uint64_t generator_seed = 0);

  std::size_t num_workers() const noexcept override { return centers_.size(); }
  std::size_t dim() const noexcept override { return hessian_.size(); }

  ParamVector local_grad(std::size_t worker, const ParamVector& x) const override;
  ParamVector stochastic_grad(std::size_t worker, const ParamVector& x, RngStream& rng) const override;
  double local_value(std::size_t worker, const ParamVector& x) const override;

  const std::vector<double>& hessian() const noexcept { return hessian_; }
  const std::vector<ParamVector>& centers() const noexcept { return centers_; }
  double sigma() const noexcept { return sigma_; }
  std::uint64_t generator_seed() const noexcept { return generator_seed_; }
  /// Global minimizer c_bar (mean of centers).
  const ParamVector& minimizer() const noexcept { return center_mean_; }

 private:
  std::vector<double> hessian_;
  std::vector<ParamVector> centers_;
  ParamVector center_mean_;
  double sigma_;
  std::uint64_t generator_seed_;
};

struct LabeledSample {
  ParamVector features;  // includes a constant bias coordinate when generated
  int label;             // +1 or -1
};

/// F_i = mean over worker i's samples of log(1 + exp(-y f.x)) + lambda/2 ||x||^2.
/// Mini-batches are drawn uniformly with replacement.
class LogisticEnsemble final : public Ensemble {
 public:
  LogisticEnsemble(std::vector<std::vector<LabeledSample>> data, double lambda, std::size_t batch);

  std::size_t num_workers() const noexcept override { return data_.size(); }
  std::size_t dim() const noexcept override { return dim_; }

  ParamVector local_grad(std::size_t worker, const ParamVector& x) const override;
  ParamVector stochastic_grad(std::size_t worker, const ParamVector& x, RngStream& rng) const override;
  double local_value(std::size_t worker, const ParamVector& x) const override;

  const std::vector<std::vector<LabeledSample>>& data() const noexcept { return data_; }
  double lambda() const noexcept { return lambda_; }
  std::size_t batch() const noexcept { return batch_; }

  /// Conservative smoothness bound lambda + max ||f||^2 / 4 (not tight).
  double smoothness_upper_bound() const;

 private:
  void accumulate_sample_grad(const LabeledSample& s, const ParamVector& x, double weight,
                              ParamVector& out) const;

  std::vector<std::vector<LabeledSample>> data_;
  double lambda_;
  std::size_t batch_;
  std::size_t dim_;
};

struct ExactConstants {
  double L;
  double kappa2;
  double F_inf;
};

/// Closed-form L = max a_j, kappa^2 = (1/m) sum ||A (c_i - c_bar)||^2, F_inf = F(c_bar).
ExactConstants exact_constants(const QuadraticEnsemble& ensemble);

/// What can be said about a logistic ensemble: an L upper bound, no certified
/// kappa^2, and F_inf taken from the best objective value observed so far.
struct EstimatedConstants {
  double L_upper;
  std::optional<double> kappa2;
  double F_inf_estimate;
  bool is_estimate = true;
};

EstimatedConstants estimated_constants(const LogisticEnsemble& ensemble, double best_observed_value);

/// Hessian entries log-uniform in [1, condition]; centers i.i.d. N(0, spread^2).
/// The center draws are standard normals scaled by spread, so the same rng seed
/// with a different spread scales every center (and sqrt(kappa^2)) proportionally.
QuadraticEnsemble make_quadratic(std::size_t m, std::size_t d, double spread, double condition,
                                 double sigma, const RngStream& rng);

/// Gaussian-mixture classification pool: class means ~ N(0, separation^2) in R^{d-1},
/// samples = mean + N(0, 1), a constant 1 appended as the last coordinate.
/// Binary label is +1 for the first half of the classes, -1 otherwise.
struct ClassificationPool {
  std::vector<ParamVector> features;
  std::vector<int> classes;
  std::size_t num_classes = 0;

  int binary_label(std::size_t sample) const;
};

ClassificationPool make_classification(std::size_t n, std::size_t d, std::size_t num_classes,
                                       double separation, const RngStream& rng);

void to_json(nlohmann::json& j, const QuadraticEnsemble& e);
QuadraticEnsemble quadratic_from_json(const nlohmann::json& j);

}  // namespace olab
