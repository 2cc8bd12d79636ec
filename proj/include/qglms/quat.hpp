#pragma once

// Quaternion scalars and component-planar quaternion graph signals.
//
// A quaternion q = w + x i + y j + z k multiplies by the Hamilton rules
//   i^2 = j^2 = k^2 = ijk = -1,  ij = -ji = k,  jk = -kj = i,  ki = -ik = j.
// All matrices acting on graph signals (eigenbasis, masks, projectors) are
// real, so a quaternion vector is stored as four real planes and every
// matrix product reduces to four independent real products.

#include <Eigen/Core>

#include <array>
#include <cmath>
#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

namespace qglms {

struct Quaternion {
    double w = 0.0;
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    static constexpr Quaternion one() { return {1.0, 0.0, 0.0, 0.0}; }
    static constexpr Quaternion i() { return {0.0, 1.0, 0.0, 0.0}; }
    static constexpr Quaternion j() { return {0.0, 0.0, 1.0, 0.0}; }
    static constexpr Quaternion k() { return {0.0, 0.0, 0.0, 1.0}; }

    constexpr double operator[](std::size_t c) const
    {
        return c == 0 ? w : c == 1 ? x : c == 2 ? y : z;
    }

    friend constexpr bool operator==(const Quaternion&, const Quaternion&) = default;
};

constexpr Quaternion qmul(const Quaternion& a, const Quaternion& b)
{
    // Paired grouping keeps q * conj(q) exactly real and makes
    // conj(a * b) == conj(b) * conj(a) hold bit for bit.
    return {a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
            (a.w * b.x + a.x * b.w) + (a.y * b.z - a.z * b.y),
            (a.w * b.y + a.y * b.w) + (a.z * b.x - a.x * b.z),
            (a.w * b.z + a.z * b.w) + (a.x * b.y - a.y * b.x)};
}

constexpr Quaternion conj(const Quaternion& q) { return {q.w, -q.x, -q.y, -q.z}; }

constexpr Quaternion operator*(const Quaternion& a, const Quaternion& b) { return qmul(a, b); }
constexpr Quaternion operator+(const Quaternion& a, const Quaternion& b)
{
    return {a.w + b.w, a.x + b.x, a.y + b.y, a.z + b.z};
}
constexpr Quaternion operator-(const Quaternion& a, const Quaternion& b)
{
    return {a.w - b.w, a.x - b.x, a.y - b.y, a.z - b.z};
}
constexpr Quaternion operator-(const Quaternion& q) { return {-q.w, -q.x, -q.y, -q.z}; }
constexpr Quaternion operator*(double s, const Quaternion& q)
{
    return {s * q.w, s * q.x, s * q.y, s * q.z};
}

/// Squared modulus; equals the scalar part of q * conj(q).
constexpr double norm2(const Quaternion& q) { return q.w * q.w + q.x * q.x + q.y * q.y + q.z * q.z; }
inline double abs(const Quaternion& q) { return std::sqrt(norm2(q)); }

std::ostream& operator<<(std::ostream& os, const Quaternion& q);

/// N x 4 column-major block; column c is the c-th real plane.
using PlaneMatrix = Eigen::Matrix<double, Eigen::Dynamic, 4>;

/// Length-N quaternion vector over graph vertices, stored component-planar.
class QSignal {
public:
    QSignal() = default;
    explicit QSignal(std::size_t n);
    explicit QSignal(PlaneMatrix planes);

    static QSignal from_planes(const std::array<Eigen::VectorXd, 4>& planes);
    static QSignal from_entries(const std::vector<Quaternion>& entries);

    std::size_t size() const { return static_cast<std::size_t>(planes_.rows()); }

    Quaternion at(std::size_t v) const;
    void set(std::size_t v, const Quaternion& q);

    auto plane(int c) const { return planes_.col(c); }
    auto plane(int c) { return planes_.col(c); }

    const PlaneMatrix& planes() const { return planes_; }
    PlaneMatrix& planes() { return planes_; }

    std::vector<Quaternion> entries() const;

    QSignal& operator+=(const QSignal& o);
    QSignal& operator-=(const QSignal& o);

    friend bool operator==(const QSignal& a, const QSignal& b)
    {
        return a.planes_.rows() == b.planes_.rows() && a.planes_ == b.planes_;
    }

private:
    PlaneMatrix planes_;
};

QSignal operator+(QSignal a, const QSignal& b);
QSignal operator-(QSignal a, const QSignal& b);
QSignal operator*(double s, QSignal a);

/// Scalar plane kept, imaginary planes zeroed.
QSignal real_part(const QSignal& s);
/// The i, j and k planes.
std::array<Eigen::VectorXd, 3> imag_components(const QSignal& s);

/// Euclidean norm over all 4N reals.
double qnorm(const QSignal& s);

/// A acts on each plane independently. A may be N x N or |F| x N.
QSignal apply_real_matrix(const Eigen::MatrixXd& A, const QSignal& s);

void write_qsignal_csv(std::ostream& os, const QSignal& s);
QSignal read_qsignal_csv(std::istream& is);
void write_qsignal_csv(const std::string& path, const QSignal& s);
QSignal read_qsignal_csv(const std::string& path);

}  // namespace qglms
