#pragma once

// Dense kernels used by the network, SMOTE and feature extraction.
//
// Each kernel exists twice: `serial::` is the plain reference loop nest and
// `parallel::` distributes independent output rows over OpenMP threads. Every
// output element is accumulated in the same order in both, so results are
// bit-identical regardless of thread count. The unqualified functions pick the
// parallel path once the work is large enough to pay for a thread team.

#include <cstddef>
#include <span>

#include "multicred/matrix.hpp"

namespace multicred::kernels {

namespace serial {
/// out = a * b (+ bias broadcast over rows when non-empty).
void gemm(const Matrix& a, const Matrix& b, std::span<const double> bias, Matrix& out);
/// out = a^T * b
void gemm_tn(const Matrix& a, const Matrix& b, Matrix& out);
/// out = a * b^T
void gemm_nt(const Matrix& a, const Matrix& b, Matrix& out);
/// Squared Euclidean distance between every pair of rows.
void pairwise_sq_dist(const Matrix& x, Matrix& out);
}  // namespace serial

namespace parallel {
void gemm(const Matrix& a, const Matrix& b, std::span<const double> bias, Matrix& out);
void gemm_tn(const Matrix& a, const Matrix& b, Matrix& out);
void gemm_nt(const Matrix& a, const Matrix& b, Matrix& out);
void pairwise_sq_dist(const Matrix& x, Matrix& out);
}  // namespace parallel

void gemm(const Matrix& a, const Matrix& b, std::span<const double> bias, Matrix& out);
void gemm_tn(const Matrix& a, const Matrix& b, Matrix& out);
void gemm_nt(const Matrix& a, const Matrix& b, Matrix& out);
void pairwise_sq_dist(const Matrix& x, Matrix& out);

/// Column sums; the loop order matches a serial row sweep.
void column_sums(const Matrix& a, std::span<double> out);

/// Number of threads the parallel path would use (1 without OpenMP).
int max_threads();

}  // namespace multicred::kernels
