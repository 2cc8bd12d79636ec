#include "qglms/spectral.hpp"

#include "qglms/csv.hpp"
#include "qglms/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <queue>
#include <sstream>
#include <stdexcept>

namespace qglms {

namespace {

constexpr int kMaxJacobiSweeps = 100;
constexpr double kJacobiOffTol = 1e-12;
constexpr double kSignTol = 1e-8;
constexpr int kMaxGraphAttempts = 1000;

void normalize_sign(Eigen::Ref<Eigen::VectorXd> v)
{
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (std::abs(v(i)) > kSignTol) {
            if (v(i) < 0.0) v = -v;
            return;
        }
    }
}

bool lex_less(const Eigen::VectorXd& a, const Eigen::VectorXd& b)
{
    return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(), b.data() + b.size());
}

}  // namespace

Graph::Graph(Eigen::MatrixXd adjacency) : adjacency_(std::move(adjacency))
{
    const auto n = adjacency_.rows();
    if (n < 1 || adjacency_.cols() != n) throw std::invalid_argument("adjacency must be a non-empty square matrix");
    for (Eigen::Index i = 0; i < n; ++i) {
        if (adjacency_(i, i) != 0.0) throw std::invalid_argument("adjacency diagonal must be zero");
        for (Eigen::Index j = 0; j < n; ++j) {
            const double a = adjacency_(i, j);
            if (!std::isfinite(a) || a < 0.0)
                throw std::invalid_argument("adjacency weights must be finite and non-negative");
            if (a != adjacency_(j, i)) throw std::invalid_argument("adjacency must be exactly symmetric");
        }
    }
    if (!is_connected(adjacency_)) throw std::invalid_argument("graph is not connected");
}

bool is_connected(const Eigen::MatrixXd& adjacency)
{
    const auto n = adjacency.rows();
    if (n == 0) return false;
    std::vector<char> seen(static_cast<std::size_t>(n), 0);
    std::queue<Eigen::Index> frontier;
    frontier.push(0);
    seen[0] = 1;
    Eigen::Index reached = 1;
    while (!frontier.empty()) {
        const auto u = frontier.front();
        frontier.pop();
        for (Eigen::Index v = 0; v < n; ++v) {
            if (adjacency(u, v) > 0.0 && !seen[static_cast<std::size_t>(v)]) {
                seen[static_cast<std::size_t>(v)] = 1;
                ++reached;
                frontier.push(v);
            }
        }
    }
    return reached == n;
}

Graph gen_er_graph(std::size_t n, double p, std::uint64_t seed)
{
    if (n < 2) throw std::invalid_argument("random graph needs at least 2 vertices");
    if (!(p > 0.0 && p <= 1.0)) throw std::invalid_argument("edge probability must lie in (0, 1]");
    Rng rng(seed);
    std::bernoulli_distribution edge(p);
    const auto m = static_cast<Eigen::Index>(n);
    for (int attempt = 0; attempt < kMaxGraphAttempts; ++attempt) {
        Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m, m);
        for (Eigen::Index i = 0; i < m; ++i)
            for (Eigen::Index j = i + 1; j < m; ++j)
                if (edge(rng)) a(i, j) = a(j, i) = 1.0;
        if (is_connected(a)) return Graph(std::move(a));
    }
    throw std::runtime_error("no connected G(" + std::to_string(n) + ", " + std::to_string(p) + ") graph after " +
                             std::to_string(kMaxGraphAttempts) + " attempts");
}

Eigen::MatrixXd laplacian(const Eigen::MatrixXd& adjacency)
{
    Eigen::MatrixXd L = -adjacency;
    L.diagonal() = adjacency.rowwise().sum();
    return L;
}

Eigen::MatrixXd laplacian(const Graph& g) { return laplacian(g.adjacency()); }

EigenDecomposition eig_sym(const Eigen::MatrixXd& input)
{
    const auto n = input.rows();
    if (input.cols() != n) throw std::invalid_argument("eig_sym needs a square matrix");
    const double scale = std::max(1.0, input.cwiseAbs().maxCoeff());
    if ((input - input.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
        throw std::invalid_argument("eig_sym input is not symmetric");

    Eigen::MatrixXd a = 0.5 * (input + input.transpose());
    Eigen::MatrixXd v = Eigen::MatrixXd::Identity(n, n);
    const double tol = kJacobiOffTol * a.norm();

    auto off_norm = [&] {
        double s = 0.0;
        for (Eigen::Index j = 0; j < n; ++j)
            for (Eigen::Index i = 0; i < n; ++i)
                if (i != j) s += a(i, j) * a(i, j);
        return std::sqrt(s);
    };

    bool converged = false;
    for (int sweep = 0; sweep <= kMaxJacobiSweeps; ++sweep) {
        if (off_norm() <= tol) {
            converged = true;
            break;
        }
        if (sweep == kMaxJacobiSweeps) break;
        for (Eigen::Index p = 0; p < n - 1; ++p) {
            for (Eigen::Index q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                const double tau = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = tau >= 0.0 ? 1.0 / (tau + std::sqrt(1.0 + tau * tau))
                                            : -1.0 / (-tau + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;
                for (Eigen::Index k = 0; k < n; ++k) {
                    const double akp = a(k, p);
                    const double akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (Eigen::Index k = 0; k < n; ++k) {
                    const double apk = a(p, k);
                    const double aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                a(p, q) = a(q, p) = 0.0;
                for (Eigen::Index k = 0; k < n; ++k) {
                    const double vkp = v(k, p);
                    const double vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }
    if (!converged) throw std::runtime_error("Jacobi eigensolver did not converge in 100 sweeps");

    for (Eigen::Index j = 0; j < n; ++j) normalize_sign(v.col(j));

    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(), [&](auto x, auto y) { return a(x, x) < a(y, y); });

    // Clusters of numerically equal eigenvalues are ordered by eigenvector.
    const double tie_tol = 1e-9 * std::max(1.0, a.diagonal().cwiseAbs().maxCoeff());
    for (std::size_t lo = 0; lo < order.size();) {
        std::size_t hi = lo + 1;
        while (hi < order.size() && a(order[hi], order[hi]) - a(order[hi - 1], order[hi - 1]) <= tie_tol) ++hi;
        if (hi - lo > 1) {
            std::stable_sort(order.begin() + static_cast<std::ptrdiff_t>(lo),
                             order.begin() + static_cast<std::ptrdiff_t>(hi), [&](auto x, auto y) {
                                 return lex_less(v.col(x), v.col(y));
                             });
        }
        lo = hi;
    }

    EigenDecomposition out{Eigen::VectorXd(n), Eigen::MatrixXd(n, n)};
    for (Eigen::Index k = 0; k < n; ++k) {
        out.values(k) = a(order[static_cast<std::size_t>(k)], order[static_cast<std::size_t>(k)]);
        out.vectors.col(k) = v.col(order[static_cast<std::size_t>(k)]);
    }
    return out;
}

SpectralGraph build_spectral(Graph g)
{
    Eigen::MatrixXd L = laplacian(g);
    auto eig = eig_sym(L);
    return SpectralGraph{std::move(g), std::move(L), std::move(eig.values), std::move(eig.vectors)};
}

void validate_index_set(const IndexSet& set, std::size_t n, const char* what)
{
    if (set.empty()) throw std::invalid_argument(std::string(what) + " must not be empty");
    for (std::size_t k = 0; k < set.size(); ++k) {
        if (set[k] >= n)
            throw std::invalid_argument(std::string(what) + " index " + std::to_string(set[k]) +
                                        " out of range for size " + std::to_string(n));
        if (k > 0 && set[k] <= set[k - 1])
            throw std::invalid_argument(std::string(what) + " must be sorted without duplicates");
    }
}

Support Support::create(IndexSet freq_set, IndexSet sample_set, std::size_t n)
{
    validate_index_set(freq_set, n, "frequency set");
    validate_index_set(sample_set, n, "sample set");
    return Support{std::move(freq_set), std::move(sample_set)};
}

Eigen::MatrixXd vertex_mask(const IndexSet& sample_set, std::size_t n)
{
    for (auto v : sample_set)
        if (v >= n) throw std::invalid_argument("sample index " + std::to_string(v) + " out of range");
    Eigen::MatrixXd D = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (auto v : sample_set) D(static_cast<Eigen::Index>(v), static_cast<Eigen::Index>(v)) = 1.0;
    return D;
}

Eigen::MatrixXd u_f(const SpectralGraph& sg, const IndexSet& freq_set)
{
    validate_index_set(freq_set, sg.size(), "frequency set");
    Eigen::MatrixXd U(sg.eigvecs.rows(), static_cast<Eigen::Index>(freq_set.size()));
    for (std::size_t k = 0; k < freq_set.size(); ++k)
        U.col(static_cast<Eigen::Index>(k)) = sg.eigvecs.col(static_cast<Eigen::Index>(freq_set[k]));
    return U;
}

Eigen::MatrixXd band_projector(const SpectralGraph& sg, const IndexSet& freq_set)
{
    const Eigen::MatrixXd U = u_f(sg, freq_set);
    return U * U.transpose();
}

QSignal qgft(const SpectralGraph& sg, const QSignal& s)
{
    return apply_real_matrix(sg.eigvecs.transpose(), s);
}

QSignal iqgft(const SpectralGraph& sg, const QSignal& s_hat) { return apply_real_matrix(sg.eigvecs, s_hat); }

void write_edge_list(const std::string& path, const Graph& g)
{
    auto os = csv::open_out(path);
    os << "u,v,weight\n";
    const auto& a = g.adjacency();
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = i + 1; j < a.cols(); ++j)
            if (a(i, j) != 0.0) os << i << ',' << j << ',' << csv::format_double(a(i, j)) << '\n';
    if (!os) throw std::runtime_error("failed writing '" + path + "'");
}

Graph read_edge_list(const std::string& path, std::optional<std::size_t> n)
{
    auto is = csv::open_in(path);
    std::string line;
    if (!std::getline(is, line) || csv::split_row(line) != std::vector<std::string>{"u", "v", "weight"})
        throw std::runtime_error("'" + path + "': edge list must start with header 'u,v,weight'");
    struct Edge {
        std::size_t u, v;
        double w;
    };
    std::vector<Edge> edges;
    std::size_t max_index = 0;
    std::size_t row = 1;
    while (std::getline(is, line)) {
        ++row;
        if (line.empty() || line == "\r") continue;
        const auto f = csv::split_row(line);
        if (f.size() != 3) throw std::runtime_error("'" + path + "' row " + std::to_string(row) + ": expected 3 fields");
        const auto u = csv::parse_int(f[0]);
        const auto v = csv::parse_int(f[1]);
        if (u < 0 || v < 0) throw std::runtime_error("'" + path + "' row " + std::to_string(row) + ": negative index");
        if (u == v) throw std::runtime_error("'" + path + "' row " + std::to_string(row) + ": self-loop");
        edges.push_back({static_cast<std::size_t>(u), static_cast<std::size_t>(v), csv::parse_double(f[2])});
        max_index = std::max({max_index, edges.back().u, edges.back().v});
    }
    const std::size_t size = n.value_or(edges.empty() ? 1 : max_index + 1);
    if (!edges.empty() && max_index >= size)
        throw std::runtime_error("'" + path + "': vertex index exceeds declared size");
    const auto m = static_cast<Eigen::Index>(size);
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m, m);
    for (const auto& e : edges) {
        const auto u = static_cast<Eigen::Index>(e.u);
        const auto v = static_cast<Eigen::Index>(e.v);
        if (a(u, v) != 0.0 && a(u, v) != e.w)
            throw std::runtime_error("'" + path + "': conflicting weights for edge " + std::to_string(e.u) + "-" +
                                     std::to_string(e.v));
        a(u, v) = a(v, u) = e.w;
    }
    try {
        return Graph(std::move(a));
    } catch (const std::invalid_argument& err) {
        throw std::runtime_error("'" + path + "': " + err.what());
    }
}

std::string adjacency_hash(const Graph& g)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto feed = [&h](const void* data, std::size_t len) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t k = 0; k < len; ++k) {
            h ^= p[k];
            h *= 0x100000001b3ULL;
        }
    };
    const std::uint64_t n = g.size();
    feed(&n, sizeof n);
    const auto& a = g.adjacency();
    feed(a.data(), static_cast<std::size_t>(a.size()) * sizeof(double));
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void save_spectral_cache(const std::string& path, const SpectralGraph& sg)
{
    auto os = csv::open_out(path);
    os << "hash," << adjacency_hash(sg.graph) << '\n';
    os << "n," << sg.size() << '\n';
    os << "eigvals";
    for (Eigen::Index k = 0; k < sg.eigvals.size(); ++k) os << ',' << csv::format_double(sg.eigvals(k));
    os << '\n';
    for (Eigen::Index i = 0; i < sg.eigvecs.rows(); ++i) {
        os << "eigvec_row";
        for (Eigen::Index k = 0; k < sg.eigvecs.cols(); ++k) os << ',' << csv::format_double(sg.eigvecs(i, k));
        os << '\n';
    }
    if (!os) throw std::runtime_error("failed writing '" + path + "'");
}

std::optional<SpectralGraph> load_spectral_cache(const std::string& path, const Graph& g)
{
    auto is = csv::open_in(path);
    auto bad = [&path](const std::string& what) { return std::runtime_error("'" + path + "': " + what); };
    std::string line;
    if (!std::getline(is, line)) throw bad("empty spectral cache");
    auto f = csv::split_row(line);
    if (f.size() != 2 || f[0] != "hash") throw bad("missing hash line");
    if (f[1] != adjacency_hash(g)) return std::nullopt;

    if (!std::getline(is, line)) throw bad("missing size line");
    f = csv::split_row(line);
    if (f.size() != 2 || f[0] != "n" || static_cast<std::size_t>(csv::parse_int(f[1])) != g.size())
        throw bad("size line does not match graph");
    const auto n = static_cast<Eigen::Index>(g.size());

    if (!std::getline(is, line)) throw bad("missing eigenvalue line");
    f = csv::split_row(line);
    if (static_cast<Eigen::Index>(f.size()) != n + 1 || f[0] != "eigvals") throw bad("malformed eigenvalue line");
    Eigen::VectorXd vals(n);
    for (Eigen::Index k = 0; k < n; ++k) vals(k) = csv::parse_double(f[static_cast<std::size_t>(k + 1)]);

    Eigen::MatrixXd vecs(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!std::getline(is, line)) throw bad("truncated eigenvector rows");
        f = csv::split_row(line);
        if (static_cast<Eigen::Index>(f.size()) != n + 1 || f[0] != "eigvec_row") throw bad("malformed eigenvector row");
        for (Eigen::Index k = 0; k < n; ++k) vecs(i, k) = csv::parse_double(f[static_cast<std::size_t>(k + 1)]);
    }
    return SpectralGraph{g, laplacian(g), std::move(vals), std::move(vecs)};
}

}  // namespace qglms
