#pragma once

// Shared numeric types, the deterministic RNG contract and run configuration.

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace olab {

struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct NonFiniteError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Dense d-dimensional model/gradient vector in 64-bit floating point.
/// Every kernel that writes one checks dimensions and finiteness.
class ParamVector {
 public:
  ParamVector() = default;
  explicit ParamVector(std::size_t dim, double fill = 0.0) : values_(dim, fill) {}
  ParamVector(std::initializer_list<double> init) : values_(init) {}
  explicit ParamVector(std::vector<double> values) : values_(std::move(values)) {}

  std::size_t size() const noexcept { return values_.size(); }
  double& operator[](std::size_t i) noexcept { return values_[i]; }
  double operator[](std::size_t i) const noexcept { return values_[i]; }

  std::span<double> span() noexcept { return values_; }
  std::span<const double> span() const noexcept { return values_; }
  const std::vector<double>& values() const noexcept { return values_; }

  auto begin() const noexcept { return values_.begin(); }
  auto end() const noexcept { return values_.end(); }

  bool all_finite() const noexcept;

  /// Exact elementwise equality (the "bitwise" comparison used by replay tests).
  friend bool operator==(const ParamVector&, const ParamVector&) = default;

 private:
  std::vector<double> values_;
};

/// Returns a*x + y.
ParamVector axpy(double a, const ParamVector& x, const ParamVector& y);

/// y <- a*x + y.
void axpy_inplace(double a, const ParamVector& x, ParamVector& y);

/// x <- a*x.
void scale_inplace(double a, ParamVector& x);

double dot(const ParamVector& x, const ParamVector& y);
double norm_sq(const ParamVector& x);
double max_abs_diff(const ParamVector& x, const ParamVector& y);

/// Mean over a non-empty set of vectors, summed left-to-right over index as
/// x0 + (sum_{i>=1} (x_i - x0)) / m, so that identical inputs average exactly.
ParamVector mean_of(std::span<const ParamVector> xs);

void require_same_dim(const ParamVector& x, const ParamVector& y, std::string_view what);
void require_finite(const ParamVector& x, std::string_view what);

/// Counter-based stream: value n is splitmix64(key + (n+1)*gamma). Children are
/// keyed by hashing (parent key, worker, purpose), so draws never depend on the
/// order in which streams are consumed.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed);

  /// Per-worker child stream. Throws std::out_of_range if worker >= num_workers.
  RngStream split(std::size_t worker, std::size_t num_workers, std::string_view purpose) const;
  /// Child stream not tied to a worker.
  RngStream derive(std::string_view purpose) const;

  std::uint64_t next_u64() noexcept;
  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept;
  /// Standard normal (Box-Muller, spare value cached).
  double normal() noexcept;
  bool bernoulli(double p) noexcept;
  /// Uniform integer in [0, n).
  std::size_t below(std::size_t n) noexcept;

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t key() const noexcept { return key_; }

 private:
  RngStream(std::uint64_t seed, std::uint64_t key) : seed_(seed), key_(key) {}

  std::uint64_t seed_;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  std::optional<double> spare_normal_;
};

RngStream split_rng(const RngStream& root, std::size_t worker, std::size_t num_workers,
                    std::string_view purpose);

/// Full configuration of one run of one algorithm.
struct HyperParams {
  std::size_t m = 1;
  std::size_t d = 1;
  std::size_t tau = 1;
  double alpha = 0.6;
  /// Empty means "derive from the convergence theorem" (needs an exact L).
  std::optional<double> eta = 0.1;
  double beta = 0.7;
  double mu = 0.0;
  std::size_t K = 1;
  std::uint64_t seed = 0;

  bool eta_from_theorem() const noexcept { return !eta.has_value(); }

  /// alpha in {0, 1} is accepted only when verification_mode is set.
  void validate(bool verification_mode) const;
};

}  // namespace olab
