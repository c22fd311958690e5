#include "nbeats/kernels.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

#ifdef __AVX512F__
#include <immintrin.h>
#endif

namespace nbeats::kernels {

namespace {

int resolve_workers_from_env() {
    if (const char* env = std::getenv("NBEATS_WORKERS")) {
        try {
            int n = std::stoi(env);
            if (n >= 1) return n;
        } catch (const std::exception&) {
            // fall through to the default below
        }
    }
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

std::atomic<int> g_workers{0};

// Below this many output elements the parallel entry points skip the OpenMP
// region entirely; the fork/join overhead dwarfs the arithmetic.
constexpr std::size_t kParallelThreshold = 8192;

void check_gemm_shapes(const Matrix& a, const Matrix& b, const Matrix& c,
                       std::size_t m, std::size_t n, std::size_t ka, std::size_t kb,
                       const char* name) {
    if (ka != kb) {
        throw std::invalid_argument(std::string(name) + ": inner dimensions mismatch, " +
                                    a.shape_str() + " vs " + b.shape_str());
    }
    if (c.rows() != m || c.cols() != n) {
        throw std::invalid_argument(std::string(name) + ": output is " + c.shape_str() +
                                    ", expected " + std::to_string(m) + "x" + std::to_string(n));
    }
}

// Dot products with a fixed eight-lane accumulation order: lane l gathers
// elements k with k % 8 == l, lanes combine as a fixed tree, the k % 8 tail
// is appended last. The intrinsic and scalar paths implement the identical
// order, so results never depend on build flags or thread count within a
// binary, and dot8/dot8x4 agree element for element.

#ifdef __AVX512F__

inline double hsum_tree(__m512d acc, double tail) {
    alignas(64) double lane[8];
    _mm512_store_pd(lane, acc);
    return (((lane[0] + lane[1]) + (lane[2] + lane[3])) +
            ((lane[4] + lane[5]) + (lane[6] + lane[7]))) +
           tail;
}

inline double dot8(const double* x, const double* y, std::size_t n) {
    __m512d acc = _mm512_setzero_pd();
    std::size_t k = 0;
    for (; k + 8 <= n; k += 8) {
        acc = _mm512_fmadd_pd(_mm512_loadu_pd(x + k), _mm512_loadu_pd(y + k), acc);
    }
    double tail = 0.0;
    for (; k < n; ++k) tail = std::fma(x[k], y[k], tail);
    return hsum_tree(acc, tail);
}

// Four dot products sharing the left operand. Independent accumulator chains
// hide FMA latency and the shared load of x halves memory traffic.
inline void dot8x4(const double* x, const double* y0, const double* y1, const double* y2,
                   const double* y3, std::size_t n, double out[4]) {
    __m512d a0 = _mm512_setzero_pd();
    __m512d a1 = _mm512_setzero_pd();
    __m512d a2 = _mm512_setzero_pd();
    __m512d a3 = _mm512_setzero_pd();
    std::size_t k = 0;
    for (; k + 8 <= n; k += 8) {
        const __m512d xv = _mm512_loadu_pd(x + k);
        a0 = _mm512_fmadd_pd(xv, _mm512_loadu_pd(y0 + k), a0);
        a1 = _mm512_fmadd_pd(xv, _mm512_loadu_pd(y1 + k), a1);
        a2 = _mm512_fmadd_pd(xv, _mm512_loadu_pd(y2 + k), a2);
        a3 = _mm512_fmadd_pd(xv, _mm512_loadu_pd(y3 + k), a3);
    }
    double t0 = 0.0, t1 = 0.0, t2 = 0.0, t3 = 0.0;
    for (; k < n; ++k) {
        const double xv = x[k];
        t0 = std::fma(xv, y0[k], t0);
        t1 = std::fma(xv, y1[k], t1);
        t2 = std::fma(xv, y2[k], t2);
        t3 = std::fma(xv, y3[k], t3);
    }
    out[0] = hsum_tree(a0, t0);
    out[1] = hsum_tree(a1, t1);
    out[2] = hsum_tree(a2, t2);
    out[3] = hsum_tree(a3, t3);
}

#else  // portable fallback

inline double dot8(const double* x, const double* y, std::size_t n) {
    double acc[8] = {0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0};
    std::size_t k = 0;
    for (; k + 8 <= n; k += 8) {
        for (int l = 0; l < 8; ++l) acc[l] = std::fma(x[k + l], y[k + l], acc[l]);
    }
    double tail = 0.0;
    for (; k < n; ++k) tail = std::fma(x[k], y[k], tail);
    return (((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]))) +
           tail;
}

inline void dot8x4(const double* x, const double* y0, const double* y1, const double* y2,
                   const double* y3, std::size_t n, double out[4]) {
    out[0] = dot8(x, y0, n);
    out[1] = dot8(x, y1, n);
    out[2] = dot8(x, y2, n);
    out[3] = dot8(x, y3, n);
}

#endif

void gemm_nt_rows(const Matrix& a, const Matrix& b, Matrix& c, std::size_t r0, std::size_t r1) {
    const std::size_t n = b.rows();
    const std::size_t kk = a.cols();
    for (std::size_t i = r0; i < r1; ++i) {
        const double* ai = a.data() + i * kk;
        double* ci = c.data() + i * n;
        std::size_t j = 0;
        for (; j + 4 <= n; j += 4) {
            const double* base = b.data() + j * kk;
            dot8x4(ai, base, base + kk, base + 2 * kk, base + 3 * kk, kk, ci + j);
        }
        for (; j < n; ++j) ci[j] = dot8(ai, b.data() + j * kk, kk);
    }
}

// Row-wise axpy accumulation for the two backward products. Unrolling k by
// four with a fixed combine order quarters the store traffic; the order is
// part of the kernel definition, identical for every caller and thread.
inline void axpy_rows(const double* coeff, std::size_t stride, const double* b, std::size_t n,
                      std::size_t kk, double* ci) {
    for (std::size_t j = 0; j < n; ++j) ci[j] = 0.0;
    std::size_t k = 0;
    for (; k + 4 <= kk; k += 4) {
        const double c0 = coeff[(k + 0) * stride];
        const double c1 = coeff[(k + 1) * stride];
        const double c2 = coeff[(k + 2) * stride];
        const double c3 = coeff[(k + 3) * stride];
        const double* b0 = b + (k + 0) * n;
        const double* b1 = b + (k + 1) * n;
        const double* b2 = b + (k + 2) * n;
        const double* b3 = b + (k + 3) * n;
        for (std::size_t j = 0; j < n; ++j) {
            ci[j] += (c0 * b0[j] + c1 * b1[j]) + (c2 * b2[j] + c3 * b3[j]);
        }
    }
    for (; k < kk; ++k) {
        const double ck = coeff[k * stride];
        const double* bk = b + k * n;
        for (std::size_t j = 0; j < n; ++j) ci[j] += ck * bk[j];
    }
}

void gemm_nn_rows(const Matrix& a, const Matrix& b, Matrix& c, std::size_t r0, std::size_t r1) {
    const std::size_t n = b.cols();
    const std::size_t kk = a.cols();
    for (std::size_t i = r0; i < r1; ++i) {
        axpy_rows(a.data() + i * kk, 1, b.data(), n, kk, c.data() + i * n);
    }
}

void gemm_tn_rows(const Matrix& a, const Matrix& b, Matrix& c, std::size_t r0, std::size_t r1) {
    const std::size_t n = b.cols();
    const std::size_t kk = a.rows();
    const std::size_t m = a.cols();
    for (std::size_t i = r0; i < r1; ++i) {
        axpy_rows(a.data() + i, m, b.data(), n, kk, c.data() + i * n);
    }
}

void colsum_cols(const Matrix& a, std::vector<double>& out, std::size_t c0, std::size_t c1) {
    const std::size_t rows = a.rows();
    const std::size_t cols = a.cols();
    for (std::size_t j = c0; j < c1; ++j) {
        double s = 0.0;
        const double* p = a.data() + j;
        for (std::size_t i = 0; i < rows; ++i) s += p[i * cols];
        out[j] = s;
    }
}

template <typename RowFn>
void run_rows(std::size_t rows, std::size_t work_per_row, RowFn&& fn) {
    const std::size_t total = rows * work_per_row;
#ifdef _OPENMP
    if (total >= kParallelThreshold && workers() > 1 && rows > 1) {
#pragma omp parallel for schedule(static) num_threads(workers())
        for (long long i = 0; i < static_cast<long long>(rows); ++i) {
            fn(static_cast<std::size_t>(i), static_cast<std::size_t>(i) + 1);
        }
        return;
    }
#else
    (void)total;
#endif
    fn(0, rows);
}

}  // namespace

int workers() {
    int n = g_workers.load(std::memory_order_relaxed);
    if (n == 0) {
        n = resolve_workers_from_env();
        g_workers.store(n, std::memory_order_relaxed);
    }
    return n;
}

void set_workers(int n) {
    if (n < 1) throw std::invalid_argument("set_workers: need at least one worker");
    g_workers.store(n, std::memory_order_relaxed);
}

namespace serial {

void gemm_nt(const Matrix& a, const Matrix& b, Matrix& c) {
    check_gemm_shapes(a, b, c, a.rows(), b.rows(), a.cols(), b.cols(), "gemm_nt");
    gemm_nt_rows(a, b, c, 0, a.rows());
}

void gemm_nn(const Matrix& a, const Matrix& b, Matrix& c) {
    check_gemm_shapes(a, b, c, a.rows(), b.cols(), a.cols(), b.rows(), "gemm_nn");
    gemm_nn_rows(a, b, c, 0, a.rows());
}

void gemm_tn(const Matrix& a, const Matrix& b, Matrix& c) {
    check_gemm_shapes(a, b, c, a.cols(), b.cols(), a.rows(), b.rows(), "gemm_tn");
    gemm_tn_rows(a, b, c, 0, a.cols());
}

void colsum(const Matrix& a, std::vector<double>& out) {
    out.assign(a.cols(), 0.0);
    colsum_cols(a, out, 0, a.cols());
}

}  // namespace serial

void gemm_nt(const Matrix& a, const Matrix& b, Matrix& c) {
    check_gemm_shapes(a, b, c, a.rows(), b.rows(), a.cols(), b.cols(), "gemm_nt");
    run_rows(a.rows(), b.rows() * a.cols(),
             [&](std::size_t r0, std::size_t r1) { gemm_nt_rows(a, b, c, r0, r1); });
}

void gemm_nn(const Matrix& a, const Matrix& b, Matrix& c) {
    check_gemm_shapes(a, b, c, a.rows(), b.cols(), a.cols(), b.rows(), "gemm_nn");
    run_rows(a.rows(), b.cols() * a.cols(),
             [&](std::size_t r0, std::size_t r1) { gemm_nn_rows(a, b, c, r0, r1); });
}

void gemm_tn(const Matrix& a, const Matrix& b, Matrix& c) {
    check_gemm_shapes(a, b, c, a.cols(), b.cols(), a.rows(), b.rows(), "gemm_tn");
    run_rows(a.cols(), b.cols() * a.rows(),
             [&](std::size_t r0, std::size_t r1) { gemm_tn_rows(a, b, c, r0, r1); });
}

void colsum(const Matrix& a, std::vector<double>& out) {
    out.assign(a.cols(), 0.0);
    run_rows(a.cols(), a.rows(),
             [&](std::size_t c0, std::size_t c1) { colsum_cols(a, out, c0, c1); });
}

}  // namespace nbeats::kernels
