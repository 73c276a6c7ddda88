#include "multicred/kernels.hpp"

#include <algorithm>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace multicred::kernels {
namespace {

// Below this many multiply-adds a thread team costs more than it saves.
constexpr std::size_t kParallelWork = 1u << 15;

void check_gemm(const Matrix& a, const Matrix& b, std::span<const double> bias, Matrix& out) {
    if (a.cols() != b.rows()) {
        throw ShapeError("gemm: inner dimensions " + std::to_string(a.cols()) + " and " +
                         std::to_string(b.rows()) + " differ");
    }
    if (!bias.empty() && bias.size() != b.cols()) throw ShapeError("gemm: bias width mismatch");
    if (out.rows() != a.rows() || out.cols() != b.cols()) out = Matrix(a.rows(), b.cols());
}

void check_gemm_tn(const Matrix& a, const Matrix& b, Matrix& out) {
    if (a.rows() != b.rows()) throw ShapeError("gemm_tn: row counts differ");
    if (out.rows() != a.cols() || out.cols() != b.cols()) out = Matrix(a.cols(), b.cols());
}

void check_gemm_nt(const Matrix& a, const Matrix& b, Matrix& out) {
    if (a.cols() != b.cols()) throw ShapeError("gemm_nt: column counts differ");
    if (out.rows() != a.rows() || out.cols() != b.rows()) out = Matrix(a.rows(), b.rows());
}

// Row kernels shared by both paths; only the outer loop differs.

inline void gemm_row(const Matrix& a, const Matrix& b, std::span<const double> bias, Matrix& out,
                     std::size_t i) {
    const std::size_t n = b.cols();
    double* o = out.row(i).data();
    if (bias.empty()) {
        std::fill(o, o + n, 0.0);
    } else {
        std::copy(bias.begin(), bias.end(), o);
    }
    const double* ar = a.row(i).data();
    for (std::size_t p = 0; p < a.cols(); ++p) {
        const double av = ar[p];
        if (av == 0.0) continue;
        const double* br = b.row(p).data();
        for (std::size_t j = 0; j < n; ++j) o[j] += av * br[j];
    }
}

inline void gemm_tn_row(const Matrix& a, const Matrix& b, Matrix& out, std::size_t p) {
    const std::size_t n = b.cols();
    double* o = out.row(p).data();
    std::fill(o, o + n, 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double av = a(i, p);
        if (av == 0.0) continue;
        const double* br = b.row(i).data();
        for (std::size_t j = 0; j < n; ++j) o[j] += av * br[j];
    }
}

inline void gemm_nt_row(const Matrix& a, const Matrix& b, Matrix& out, std::size_t i) {
    const double* ar = a.row(i).data();
    for (std::size_t j = 0; j < b.rows(); ++j) {
        const double* br = b.row(j).data();
        double s = 0.0;
        for (std::size_t p = 0; p < a.cols(); ++p) s += ar[p] * br[p];
        out(i, j) = s;
    }
}

inline void dist_row(const Matrix& x, Matrix& out, std::size_t i) {
    const double* xi = x.row(i).data();
    for (std::size_t j = 0; j < x.rows(); ++j) {
        const double* xj = x.row(j).data();
        double s = 0.0;
        for (std::size_t p = 0; p < x.cols(); ++p) {
            const double d = xi[p] - xj[p];
            s += d * d;
        }
        out(i, j) = s;
    }
}

}  // namespace

namespace serial {

void gemm(const Matrix& a, const Matrix& b, std::span<const double> bias, Matrix& out) {
    check_gemm(a, b, bias, out);
    for (std::size_t i = 0; i < a.rows(); ++i) gemm_row(a, b, bias, out, i);
}

void gemm_tn(const Matrix& a, const Matrix& b, Matrix& out) {
    check_gemm_tn(a, b, out);
    for (std::size_t p = 0; p < a.cols(); ++p) gemm_tn_row(a, b, out, p);
}

void gemm_nt(const Matrix& a, const Matrix& b, Matrix& out) {
    check_gemm_nt(a, b, out);
    for (std::size_t i = 0; i < a.rows(); ++i) gemm_nt_row(a, b, out, i);
}

void pairwise_sq_dist(const Matrix& x, Matrix& out) {
    if (out.rows() != x.rows() || out.cols() != x.rows()) out = Matrix(x.rows(), x.rows());
    for (std::size_t i = 0; i < x.rows(); ++i) dist_row(x, out, i);
}

}  // namespace serial

namespace parallel {

void gemm(const Matrix& a, const Matrix& b, std::span<const double> bias, Matrix& out) {
    check_gemm(a, b, bias, out);
    const auto rows = static_cast<std::ptrdiff_t>(a.rows());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < rows; ++i) gemm_row(a, b, bias, out, static_cast<std::size_t>(i));
}

void gemm_tn(const Matrix& a, const Matrix& b, Matrix& out) {
    check_gemm_tn(a, b, out);
    const auto rows = static_cast<std::ptrdiff_t>(a.cols());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t p = 0; p < rows; ++p) gemm_tn_row(a, b, out, static_cast<std::size_t>(p));
}

void gemm_nt(const Matrix& a, const Matrix& b, Matrix& out) {
    check_gemm_nt(a, b, out);
    const auto rows = static_cast<std::ptrdiff_t>(a.rows());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < rows; ++i) gemm_nt_row(a, b, out, static_cast<std::size_t>(i));
}

void pairwise_sq_dist(const Matrix& x, Matrix& out) {
    if (out.rows() != x.rows() || out.cols() != x.rows()) out = Matrix(x.rows(), x.rows());
    const auto rows = static_cast<std::ptrdiff_t>(x.rows());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < rows; ++i) dist_row(x, out, static_cast<std::size_t>(i));
}

}  // namespace parallel

void gemm(const Matrix& a, const Matrix& b, std::span<const double> bias, Matrix& out) {
    if (a.rows() * a.cols() * b.cols() >= kParallelWork && max_threads() > 1) {
        parallel::gemm(a, b, bias, out);
    } else {
        serial::gemm(a, b, bias, out);
    }
}

void gemm_tn(const Matrix& a, const Matrix& b, Matrix& out) {
    if (a.rows() * a.cols() * b.cols() >= kParallelWork && max_threads() > 1) {
        parallel::gemm_tn(a, b, out);
    } else {
        serial::gemm_tn(a, b, out);
    }
}

void gemm_nt(const Matrix& a, const Matrix& b, Matrix& out) {
    if (a.rows() * a.cols() * b.rows() >= kParallelWork && max_threads() > 1) {
        parallel::gemm_nt(a, b, out);
    } else {
        serial::gemm_nt(a, b, out);
    }
}

void pairwise_sq_dist(const Matrix& x, Matrix& out) {
    if (x.rows() * x.rows() * x.cols() >= kParallelWork && max_threads() > 1) {
        parallel::pairwise_sq_dist(x, out);
    } else {
        serial::pairwise_sq_dist(x, out);
    }
}

void column_sums(const Matrix& a, std::span<double> out) {
    if (out.size() != a.cols()) throw ShapeError("column_sums: output width mismatch");
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double* r = a.row(i).data();
        for (std::size_t j = 0; j < a.cols(); ++j) out[j] += r[j];
    }
}

int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

}  // namespace multicred::kernels
