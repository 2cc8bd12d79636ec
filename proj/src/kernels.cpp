#include "qglms/kernels.hpp"

#include <omp.h>

#include <algorithm>
#include <stdexcept>

namespace qglms::kernels {

static void check_dims(const Eigen::MatrixXd& A, const PlaneMatrix& in)
{
    if (A.cols() != in.rows())
        throw std::invalid_argument("matrix column count " + std::to_string(A.cols()) +
                                    " does not match signal length " + std::to_string(in.rows()));
}

void matmul_planes_serial(const Eigen::MatrixXd& A, const PlaneMatrix& in, PlaneMatrix& out)
{
    check_dims(A, in);
    const Eigen::Index rows = A.rows();
    const Eigen::Index cols = A.cols();
    out.setZero(rows, 4);
    // Column (axpy) order: per output entry the additions still run j = 0..cols-1.
    for (int c = 0; c < 4; ++c) {
        double* o = out.col(c).data();
        for (Eigen::Index j = 0; j < cols; ++j) {
            const double s = in(j, c);
            const double* a = A.col(j).data();
            for (Eigen::Index i = 0; i < rows; ++i) o[i] += a[i] * s;
        }
    }
}

void matmul_planes_omp(const Eigen::MatrixXd& A, const PlaneMatrix& in, PlaneMatrix& out)
{
    check_dims(A, in);
    const Eigen::Index rows = A.rows();
    const Eigen::Index cols = A.cols();
    out.setZero(rows, 4);
    // Each thread owns a block of output rows and walks it in the serial
    // kernel's column order, so every entry sees the same additions.
    constexpr Eigen::Index kBlock = 64;
    const Eigen::Index blocks = (rows + kBlock - 1) / kBlock;
#pragma omp parallel for schedule(static)
    for (Eigen::Index b = 0; b < blocks; ++b) {
        const Eigen::Index r0 = b * kBlock;
        const Eigen::Index r1 = std::min(rows, r0 + kBlock);
        for (int c = 0; c < 4; ++c) {
            double* o = out.col(c).data();
            for (Eigen::Index j = 0; j < cols; ++j) {
                const double s = in(j, c);
                const double* a = A.col(j).data();
                for (Eigen::Index i = r0; i < r1; ++i) o[i] += a[i] * s;
            }
        }
    }
}

void matmul_planes(const Eigen::MatrixXd& A, const PlaneMatrix& in, PlaneMatrix& out)
{
    if (A.rows() >= kParallelRows && !omp_in_parallel() && omp_get_max_threads() > 1)
        matmul_planes_omp(A, in, out);
    else
        matmul_planes_serial(A, in, out);
}

int max_workers() { return omp_get_max_threads(); }

void set_workers(int workers)
{
    if (workers < 1) throw std::invalid_argument("worker count must be >= 1");
    omp_set_num_threads(workers);
}

}  // namespace qglms::kernels
