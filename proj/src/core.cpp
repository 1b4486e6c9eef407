#include "olab/core.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace olab {

namespace {

constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;

std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t fnv1a(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t child_key(std::uint64_t parent, std::uint64_t worker, std::string_view purpose) noexcept {
  std::uint64_t k = mix64(parent ^ mix64(fnv1a(purpose)));
  return mix64(k + (worker + 1) * kGamma);
}

}  // namespace

bool ParamVector::all_finite() const noexcept {
  for (double v : values_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

void require_same_dim(const ParamVector& x, const ParamVector& y, std::string_view what) {
  if (x.size() != y.size()) {
    throw DimensionError(std::string(what) + ": dimension mismatch (" + std::to_string(x.size()) +
                         " vs " + std::to_string(y.size()) + ")");
  }
}

void require_finite(const ParamVector& x, std::string_view what) {
  if (!x.all_finite()) throw NonFiniteError(std::string(what) + ": non-finite entry");
}

ParamVector axpy(double a, const ParamVector& x, const ParamVector& y) {
  ParamVector out = y;
  axpy_inplace(a, x, out);
  return out;
}

void axpy_inplace(double a, const ParamVector& x, ParamVector& y) {
  require_same_dim(x, y, "axpy");
  bool finite = true;
  for (std::size_t i = 0; i < y.size(); ++i) {
    y[i] = a * x[i] + y[i];
    finite &= std::isfinite(y[i]);
  }
  if (!finite) throw NonFiniteError("axpy: non-finite result");
}

void scale_inplace(double a, ParamVector& x) {
  bool finite = true;
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] *= a;
    finite &= std::isfinite(x[i]);
  }
  if (!finite) throw NonFiniteError("scale: non-finite result");
}

double dot(const ParamVector& x, const ParamVector& y) {
  require_same_dim(x, y, "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

double norm_sq(const ParamVector& x) { return dot(x, x); }

double max_abs_diff(const ParamVector& x, const ParamVector& y) {
  require_same_dim(x, y, "max_abs_diff");
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) worst = std::max(worst, std::abs(x[i] - y[i]));
  return worst;
}

ParamVector mean_of(std::span<const ParamVector> xs) {
  if (xs.empty()) throw std::invalid_argument("mean_of: empty set");
  const ParamVector& base = xs.front();
  ParamVector acc(base.size(), 0.0);
  for (std::size_t i = 1; i < xs.size(); ++i) {
    require_same_dim(base, xs[i], "mean_of");
    for (std::size_t j = 0; j < acc.size(); ++j) acc[j] += xs[i][j] - base[j];
  }
  const double inv_m = 1.0 / static_cast<double>(xs.size());
  ParamVector out = base;
  axpy_inplace(inv_m, acc, out);
  return out;
}

RngStream::RngStream(std::uint64_t seed) : seed_(seed), key_(mix64(seed ^ 0x6f6c61622d726e67ULL)) {}

RngStream RngStream::split(std::size_t worker, std::size_t num_workers, std::string_view purpose) const {
  if (worker >= num_workers) {
    throw std::out_of_range("split_rng: worker " + std::to_string(worker) + " >= m=" +
                            std::to_string(num_workers));
  }
  return RngStream(seed_, child_key(key_, worker, purpose));
}

RngStream RngStream::derive(std::string_view purpose) const {
  return RngStream(seed_, child_key(key_, ~std::uint64_t{0}, purpose));
}

std::uint64_t RngStream::next_u64() noexcept {
  ++counter_;
  return mix64(key_ + counter_ * kGamma);
}

double RngStream::uniform() noexcept {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::normal() noexcept {
  if (spare_normal_) {
    double v = *spare_normal_;
    spare_normal_.reset();
    return v;
  }
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_normal_ = r * std::sin(theta);
  return r * std::cos(theta);
}

bool RngStream::bernoulli(double p) noexcept { return uniform() < p; }

std::size_t RngStream::below(std::size_t n) noexcept {
  __extension__ using u128 = unsigned __int128;
  const u128 wide = static_cast<u128>(next_u64()) * n;
  return static_cast<std::size_t>(wide >> 64);
}

RngStream split_rng(const RngStream& root, std::size_t worker, std::size_t num_workers,
                    std::string_view purpose) {
  return root.split(worker, num_workers, purpose);
}

void HyperParams::validate(bool verification_mode) const {
  if (m < 1) throw ConfigError("m: must be >= 1");
  if (d < 1) throw ConfigError("d: must be >= 1");
  if (tau < 1) throw ConfigError("tau: must be >= 1");
  if (K < 1) throw ConfigError("K: must be >= 1");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("alpha: must lie in [0, 1]");
  if (!verification_mode && (alpha == 0.0 || alpha == 1.0)) {
    throw ConfigError("alpha: 0 and 1 are only allowed in verification mode");
  }
  if (eta && !(*eta > 0.0 && std::isfinite(*eta))) throw ConfigError("eta: must be > 0");
  if (!(beta >= 0.0 && beta < 1.0)) throw ConfigError("beta: must lie in [0, 1)");
  if (!(mu >= 0.0 && mu < 1.0)) throw ConfigError("mu: must lie in [0, 1)");
}

}  // namespace olab
