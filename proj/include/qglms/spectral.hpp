#pragma once

// Graphs, the combinatorial Laplacian and its eigenbasis, and the
// vertex-limiting / frequency-limiting operators built from it.

#include "qglms/quat.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace qglms {

using IndexSet = std::vector<std::size_t>;

/// Undirected weighted graph. Adjacency is exactly symmetric with a zero
/// diagonal and non-negative weights, and the graph is connected.
class Graph {
public:
    /// Validates every invariant; throws std::invalid_argument otherwise.
    explicit Graph(Eigen::MatrixXd adjacency);

    std::size_t size() const { return static_cast<std::size_t>(adjacency_.rows()); }
    const Eigen::MatrixXd& adjacency() const { return adjacency_; }

private:
    Eigen::MatrixXd adjacency_;
};

bool is_connected(const Eigen::MatrixXd& adjacency);

/// Connected unweighted Erdős–Rényi G(n, p), resampled until connected.
/// Throws std::runtime_error after 1000 disconnected draws.
Graph gen_er_graph(std::size_t n, double p, std::uint64_t seed);

/// L = Diag(row sums) - A.
Eigen::MatrixXd laplacian(const Graph& g);
Eigen::MatrixXd laplacian(const Eigen::MatrixXd& adjacency);

struct EigenDecomposition {
    Eigen::VectorXd values;   // ascending
    Eigen::MatrixXd vectors;  // orthonormal columns
};

/// Cyclic Jacobi eigensolver for real symmetric matrices.
///
/// Eigenvalues come back ascending. Each eigenvector is signed so that its
/// first entry with magnitude above 1e-8 is positive; inside a cluster of
/// numerically equal eigenvalues the vectors are ordered lexicographically.
/// Throws std::invalid_argument for non-symmetric input and
/// std::runtime_error if 100 sweeps do not converge.
EigenDecomposition eig_sym(const Eigen::MatrixXd& A);

struct SpectralGraph {
    Graph graph;
    Eigen::MatrixXd laplacian;
    Eigen::VectorXd eigvals;
    Eigen::MatrixXd eigvecs;

    std::size_t size() const { return graph.size(); }
};

SpectralGraph build_spectral(Graph g);

/// Sorted, duplicate-free index sets for the spectral support F and the
/// sampled vertices S.
struct Support {
    IndexSet freq_set;
    IndexSet sample_set;

    /// Throws std::invalid_argument on empty, unsorted, duplicated or
    /// out-of-range indices.
    static Support create(IndexSet freq_set, IndexSet sample_set, std::size_t n);
};

/// Checks an index set is sorted, unique, non-empty and below n.
void validate_index_set(const IndexSet& set, std::size_t n, const char* what);

/// Diag(1_S).
Eigen::MatrixXd vertex_mask(const IndexSet& sample_set, std::size_t n);

/// Columns F of the eigenbasis (N x |F|).
Eigen::MatrixXd u_f(const SpectralGraph& sg, const IndexSet& freq_set);

/// B = U_F U_F^T.
Eigen::MatrixXd band_projector(const SpectralGraph& sg, const IndexSet& freq_set);

/// Graph Fourier transform U^T s and its inverse U s, plane by plane.
QSignal qgft(const SpectralGraph& sg, const QSignal& s);
QSignal iqgft(const SpectralGraph& sg, const QSignal& s_hat);

// Edge list CSV: header `u,v,weight`, 0-based indices, one row per edge.
void write_edge_list(const std::string& path, const Graph& g);
Graph read_edge_list(const std::string& path, std::optional<std::size_t> n = std::nullopt);

/// FNV-1a over the adjacency bytes, as 16 hex digits.
std::string adjacency_hash(const Graph& g);

// Eigenbasis cache. The file records the adjacency hash; a stale cache
// (different graph) loads as std::nullopt.
void save_spectral_cache(const std::string& path, const SpectralGraph& sg);
std::optional<SpectralGraph> load_spectral_cache(const std::string& path, const Graph& g);

}  // namespace qglms
