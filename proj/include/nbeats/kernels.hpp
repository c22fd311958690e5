#pragma once

#include <cstddef>

#include "nbeats/matrix.hpp"

namespace nbeats::kernels {

/// Number of worker threads used by the parallel kernels and by ensemble
/// training. Resolved once from the NBEATS_WORKERS environment variable
/// (falling back to the OpenMP default) unless overridden with set_workers.
int workers();
void set_workers(int n);

/// Reference kernels: single-threaded, no dispatch. The parallel entry points
/// below partition work by output row and run the exact same per-row code, so
/// results are bit-identical to these for any thread count.
namespace serial {

/// c = a * b^T   (a: m x k, b: n x k, c: m x n)
void gemm_nt(const Matrix& a, const Matrix& b, Matrix& c);

/// c = a * b     (a: m x k, b: k x n, c: m x n)
void gemm_nn(const Matrix& a, const Matrix& b, Matrix& c);

/// c = a^T * b   (a: k x m, b: k x n, c: m x n)
void gemm_tn(const Matrix& a, const Matrix& b, Matrix& c);

/// out[j] = sum_i a(i, j)
void colsum(const Matrix& a, std::vector<double>& out);

}  // namespace serial

void gemm_nt(const Matrix& a, const Matrix& b, Matrix& c);
void gemm_nn(const Matrix& a, const Matrix& b, Matrix& c);
void gemm_tn(const Matrix& a, const Matrix& b, Matrix& c);
void colsum(const Matrix& a, std::vector<double>& out);

}  // namespace nbeats::kernels
