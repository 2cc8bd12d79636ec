#pragma once

// Real-matrix times four-plane block kernels.
//
// Both kernels accumulate out(i, c) = sum_j A(i, j) * in(j, c) starting from
// 0.0 with j ascending, so their results are bit-identical. The serial one is
// the reference used in tests and the benchmark baseline.

#include "qglms/quat.hpp"

#include <Eigen/Core>

namespace qglms::kernels {

void matmul_planes_serial(const Eigen::MatrixXd& A, const PlaneMatrix& in, PlaneMatrix& out);
void matmul_planes_omp(const Eigen::MatrixXd& A, const PlaneMatrix& in, PlaneMatrix& out);

/// Row count at and above which the dispatcher uses the OpenMP kernel.
inline constexpr Eigen::Index kParallelRows = 256;

/// Serial inside an enclosing parallel region or below kParallelRows.
void matmul_planes(const Eigen::MatrixXd& A, const PlaneMatrix& in, PlaneMatrix& out);

/// Number of OpenMP threads used by parallel regions in this library.
int max_workers();
void set_workers(int workers);

}  // namespace qglms::kernels
