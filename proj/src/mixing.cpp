#include "olab/mixing.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace olab {

DenseMatrix DenseMatrix::identity(std::size_t n) {
  DenseMatrix I(n, n, 0.0);
  for (std::size_t i = 0; i < n; ++i) I(i, i) = 1.0;
  return I;
}

std::vector<double> DenseMatrix::column_sums() const {
  std::vector<double> sums(cols_, 0.0);
  for (std::size_t r = 0; r < rows_; ++r) {
    for (std::size_t c = 0; c < cols_; ++c) sums[c] += (*this)(r, c);
  }
  return sums;
}

std::vector<double> DenseMatrix::times(std::span<const double> x) const {
  if (x.size() != cols_) throw DimensionError("matrix-vector: dimension mismatch");
  std::vector<double> y(rows_, 0.0);
  for (std::size_t r = 0; r < rows_; ++r) {
    for (std::size_t c = 0; c < cols_; ++c) y[r] += (*this)(r, c) * x[c];
  }
  return y;
}

DenseMatrix DenseMatrix::times(const DenseMatrix& other) const {
  if (cols_ != other.rows_) throw DimensionError("matrix-matrix: dimension mismatch");
  DenseMatrix out(rows_, other.cols_, 0.0);
  for (std::size_t r = 0; r < rows_; ++r) {
    for (std::size_t k = 0; k < cols_; ++k) {
      const double a = (*this)(r, k);
      for (std::size_t c = 0; c < other.cols_; ++c) out(r, c) += a * other(k, c);
    }
  }
  return out;
}

DenseMatrix DenseMatrix::transposed() const {
  DenseMatrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r) {
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  }
  return t;
}

namespace {

void check_m_alpha(std::size_t m, double alpha) {
  if (m < 1) throw std::invalid_argument("mixing: m must be >= 1");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("mixing: alpha must lie in [0, 1]");
}

}  // namespace

MixingMatrix build_P(std::size_t m, double alpha) {
  check_m_alpha(m, alpha);
  const std::size_t n = m + 1;
  const double keep = 1.0 - alpha;
  DenseMatrix P(n, n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    P(i, i) = keep;
    P(i, m) = keep / static_cast<double>(m);
    P(m, i) = alpha;
  }
  P(m, m) = alpha;
  for (double s : P.column_sums()) {
    if (std::abs(s - 1.0) > 1e-12) throw std::logic_error("build_P: column sum " + std::to_string(s));
  }
  return {m, alpha, std::move(P)};
}

DenseMatrix mixing_for_step(std::size_t k, std::size_t tau, std::size_t m, double alpha) {
  if (tau < 1) throw std::invalid_argument("mixing_for_step: tau must be >= 1");
  if ((k + 1) % tau == 0) return build_P(m, alpha).entries;
  return DenseMatrix::identity(m + 1);
}

std::vector<double> fixed_vector(std::size_t m, double alpha) {
  check_m_alpha(m, alpha);
  std::vector<double> v(m + 1, (1.0 - alpha) / static_cast<double>(m));
  v[m] = alpha;
  return v;
}

double spectral_norm_svd(const DenseMatrix& M) {
  Eigen::MatrixXd E(M.rows(), M.cols());
  for (std::size_t r = 0; r < M.rows(); ++r) {
    for (std::size_t c = 0; c < M.cols(); ++c) E(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = M(r, c);
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(E);
  const auto& s = svd.singularValues();
  return s.size() == 0 ? 0.0 : s(0);
}

PowerIterationResult spectral_norm_power(const DenseMatrix& M, double tol, std::size_t max_iterations) {
  const DenseMatrix MtM = M.transposed().times(M);
  const std::size_t n = MtM.cols();
  // Deterministic, non-degenerate start vector.
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = 1.0 + 0.1 * static_cast<double>(i % 7);

  double lambda = 0.0;
  double residual = 0.0;
  for (std::size_t it = 1; it <= max_iterations; ++it) {
    double nx = 0.0;
    for (double xi : x) nx += xi * xi;
    nx = std::sqrt(nx);
    if (nx == 0.0) return {0.0, it, 0.0};
    for (double& xi : x) xi /= nx;
    std::vector<double> y = MtM.times(x);
    double next = 0.0;
    for (std::size_t i = 0; i < n; ++i) next += x[i] * y[i];
    residual = std::abs(next - lambda);
    const bool settled = residual <= tol * std::max(1.0, std::abs(next));
    lambda = next;
    x = std::move(y);
    if (lambda == 0.0) return {0.0, it, 0.0};
    if (settled && it > 1) return {std::sqrt(std::max(lambda, 0.0)), it, residual};
  }
  throw std::runtime_error("spectral_norm_power: no convergence after " + std::to_string(max_iterations) +
                           " iterations (residual " + std::to_string(residual) + ")");
}

double spectral_deviation(const DenseMatrix& P, std::span<const double> v) {
  if (P.rows() != P.cols() || v.size() != P.rows()) throw DimensionError("spectral_deviation: shape mismatch");
  DenseMatrix dev = P;
  for (std::size_t r = 0; r < P.rows(); ++r) {
    for (std::size_t c = 0; c < P.cols(); ++c) dev(r, c) -= v[r];
  }
  if (P.rows() <= 64) return spectral_norm_svd(dev);
  return spectral_norm_power(dev).norm;
}

PageRankSplit pagerank_decompose(const MixingMatrix& P) {
  const std::size_t m = P.m;
  const std::size_t n = m + 1;
  DenseMatrix A(n, n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    A(i, i) = 1.0;
    A(i, m) = 1.0 / static_cast<double>(m);
  }
  std::vector<double> b(n, 0.0);
  b[m] = 1.0;

  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      const double rebuilt = (1.0 - P.alpha) * A(r, c) + P.alpha * b[r];
      if (std::abs(rebuilt - P.entries(r, c)) > 1e-15) {
        throw std::logic_error("pagerank_decompose: reconstruction mismatch at (" + std::to_string(r) + ", " +
                               std::to_string(c) + ")");
      }
    }
  }
  return {std::move(A), std::move(b)};
}

StackedState matrix_step(const StackedState& X, const StackedState& G, const DenseMatrix& W, double eta) {
  const std::size_t n = X.num_columns();
  if (n < 2 || G.num_columns() != n || W.rows() != n || W.cols() != n) {
    throw DimensionError("matrix_step: column count mismatch");
  }
  for (double g : G.columns.back()) {
    if (g != 0.0) throw std::invalid_argument("matrix_step: anchor gradient column must be zero");
  }
  std::vector<ParamVector> stepped;
  stepped.reserve(n);
  for (std::size_t i = 0; i < n; ++i) stepped.push_back(axpy(-eta, G.columns[i], X.columns[i]));

  StackedState out;
  out.columns.assign(n, ParamVector(X.columns.front().size(), 0.0));
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < n; ++i) {
      const double w = W(i, j);
      if (w != 0.0) axpy_inplace(w, stepped[i], out.columns[j]);
    }
  }
  return out;
}

ParamVector virtual_point(const StackedState& X, std::span<const double> v) {
  if (v.size() != X.num_columns() || X.columns.empty()) throw DimensionError("virtual_point: shape mismatch");
  ParamVector y(X.columns.front().size(), 0.0);
  for (std::size_t i = 0; i < v.size(); ++i) axpy_inplace(v[i], X.columns[i], y);
  return y;
}

}  // namespace olab
