#include "qglms/quat.hpp"

#include "qglms/csv.hpp"
#include "qglms/kernels.hpp"

#include <istream>
#include <ostream>
#include <stdexcept>

namespace qglms {

std::ostream& operator<<(std::ostream& os, const Quaternion& q)
{
    return os << '(' << q.w << ", " << q.x << ", " << q.y << ", " << q.z << ')';
}

QSignal::QSignal(std::size_t n) : planes_(PlaneMatrix::Zero(static_cast<Eigen::Index>(n), 4)) {}

QSignal::QSignal(PlaneMatrix planes) : planes_(std::move(planes)) {}

QSignal QSignal::from_planes(const std::array<Eigen::VectorXd, 4>& planes)
{
    const auto n = planes[0].size();
    for (const auto& p : planes)
        if (p.size() != n) throw std::invalid_argument("quaternion planes differ in length");
    PlaneMatrix m(n, 4);
    for (int c = 0; c < 4; ++c) m.col(c) = planes[static_cast<std::size_t>(c)];
    return QSignal(std::move(m));
}

QSignal QSignal::from_entries(const std::vector<Quaternion>& entries)
{
    QSignal s(entries.size());
    for (std::size_t v = 0; v < entries.size(); ++v) s.set(v, entries[v]);
    return s;
}

Quaternion QSignal::at(std::size_t v) const
{
    const auto r = static_cast<Eigen::Index>(v);
    return {planes_(r, 0), planes_(r, 1), planes_(r, 2), planes_(r, 3)};
}

void QSignal::set(std::size_t v, const Quaternion& q)
{
    const auto r = static_cast<Eigen::Index>(v);
    planes_(r, 0) = q.w;
    planes_(r, 1) = q.x;
    planes_(r, 2) = q.y;
    planes_(r, 3) = q.z;
}

std::vector<Quaternion> QSignal::entries() const
{
    std::vector<Quaternion> out(size());
    for (std::size_t v = 0; v < out.size(); ++v) out[v] = at(v);
    return out;
}

static void require_same_size(const QSignal& a, const QSignal& b)
{
    if (a.size() != b.size())
        throw std::invalid_argument("signal lengths differ: " + std::to_string(a.size()) + " vs " +
                                    std::to_string(b.size()));
}

QSignal& QSignal::operator+=(const QSignal& o)
{
    require_same_size(*this, o);
    planes_ += o.planes_;
    return *this;
}

QSignal& QSignal::operator-=(const QSignal& o)
{
    require_same_size(*this, o);
    planes_ -= o.planes_;
    return *this;
}

QSignal operator+(QSignal a, const QSignal& b) { return a += b; }
QSignal operator-(QSignal a, const QSignal& b) { return a -= b; }

QSignal operator*(double s, QSignal a)
{
    a.planes() *= s;
    return a;
}

QSignal real_part(const QSignal& s)
{
    QSignal out(s.size());
    out.plane(0) = s.plane(0);
    return out;
}

std::array<Eigen::VectorXd, 3> imag_components(const QSignal& s)
{
    return {s.plane(1), s.plane(2), s.plane(3)};
}

double qnorm(const QSignal& s) { return s.planes().norm(); }

QSignal apply_real_matrix(const Eigen::MatrixXd& A, const QSignal& s)
{
    PlaneMatrix out;
    kernels::matmul_planes(A, s.planes(), out);
    return QSignal(std::move(out));
}

void write_qsignal_csv(std::ostream& os, const QSignal& s)
{
    os << "w,x,y,z\n";
    for (std::size_t v = 0; v < s.size(); ++v) {
        const auto q = s.at(v);
        os << csv::format_double(q.w) << ',' << csv::format_double(q.x) << ','
           << csv::format_double(q.y) << ',' << csv::format_double(q.z) << '\n';
    }
}

QSignal read_qsignal_csv(std::istream& is)
{
    std::string line;
    if (!std::getline(is, line)) throw std::runtime_error("empty quaternion signal CSV");
    const auto header = csv::split_row(line);
    if (header != std::vector<std::string>{"w", "x", "y", "z"})
        throw std::runtime_error("quaternion signal CSV must start with header 'w,x,y,z'");
    std::vector<Quaternion> entries;
    while (std::getline(is, line)) {
        if (line.empty() || line == "\r") continue;
        const auto f = csv::split_row(line);
        if (f.size() != 4)
            throw std::runtime_error("quaternion signal CSV row " + std::to_string(entries.size() + 1) +
                                     " has " + std::to_string(f.size()) + " fields");
        entries.push_back({csv::parse_double(f[0]), csv::parse_double(f[1]), csv::parse_double(f[2]),
                           csv::parse_double(f[3])});
    }
    if (entries.empty()) throw std::runtime_error("quaternion signal CSV has no rows");
    return QSignal::from_entries(entries);
}

void write_qsignal_csv(const std::string& path, const QSignal& s)
{
    auto os = csv::open_out(path);
    write_qsignal_csv(os, s);
}

QSignal read_qsignal_csv(const std::string& path)
{
    auto is = csv::open_in(path);
    return read_qsignal_csv(is);
}

}  // namespace qglms
