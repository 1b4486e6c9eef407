#pragma once

// Matrix form of the overlap update: X_{k+1} = [X_k - eta G_k] W_k, where the
// (m+1) columns of X are the m local models followed by the anchor.

#include <cstddef>
#include <span>
#include <vector>

#include "olab/core.hpp"

namespace olab {

/// Small dense row-major matrix.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static DenseMatrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  std::vector<double> column_sums() const;
  std::vector<double> times(std::span<const double> x) const;
  DenseMatrix times(const DenseMatrix& other) const;
  DenseMatrix transposed() const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// The sync-step mixing matrix
///   [ (1-a) I      (1-a) 1/m ]
///   [  a 1^T           a     ]
struct MixingMatrix {
  std::size_t m = 0;
  double alpha = 0.0;
  DenseMatrix entries;
};

MixingMatrix build_P(std::size_t m, double alpha);

/// W_k: P when (k+1) mod tau == 0, identity otherwise.
DenseMatrix mixing_for_step(std::size_t k, std::size_t tau, std::size_t m, double alpha);

/// v = [(1-a)/m, ..., (1-a)/m, a], the fixed vector P v = v with 1^T v = 1.
std::vector<double> fixed_vector(std::size_t m, double alpha);

/// Largest singular value by full SVD.
double spectral_norm_svd(const DenseMatrix& M);

struct PowerIterationResult {
  double norm;
  std::size_t iterations;
  double residual;
};

/// Largest singular value by power iteration on M^T M. Throws std::runtime_error
/// (with the last residual) if the Rayleigh quotient has not settled to tol.
PowerIterationResult spectral_norm_power(const DenseMatrix& M, double tol = 1e-12,
                                         std::size_t max_iterations = 10000);

/// zeta = ||P - v 1^T||_2; SVD when the matrix is at most 64x64, power iteration above.
/// Accepts any column-stochastic P with its fixed vector.
double spectral_deviation(const DenseMatrix& P, std::span<const double> v);

/// P = (1-a) A + a b 1^T with A = [[I, 1/m], [0, 0]] and b = e_{m+1}.
struct PageRankSplit {
  DenseMatrix A;
  std::vector<double> b;
};

PageRankSplit pagerank_decompose(const MixingMatrix& P);

struct StackedState {
  std::vector<ParamVector> columns;  // x^(1) .. x^(m), z

  std::size_t num_columns() const noexcept { return columns.size(); }
};

/// [X - eta G] W. Requires the last column of G (the anchor's gradient) to be zero.
StackedState matrix_step(const StackedState& X, const StackedState& G, const DenseMatrix& W, double eta);

/// y = X v
ParamVector virtual_point(const StackedState& X, std::span<const double> v);

}  // namespace olab
