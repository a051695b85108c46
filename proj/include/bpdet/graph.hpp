#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <utility>
#include <vector>

namespace bpdet {

// Undirected sensing graph. Nodes are 0-based internally; the scenario file
// uses 1-based labels.
class Topology {
public:
    Topology(int node_count, std::vector<std::pair<int, int>> edges);

    int node_count() const { return node_count_; }
    int edge_count() const { return static_cast<int>(edges_.size()); }
    const std::vector<std::pair<int, int>>& edges() const { return edges_; }
    const std::vector<int>& neighbors(int node) const { return neighbors_[node]; }
    int degree(int node) const { return static_cast<int>(neighbors_[node].size()); }
    int max_degree() const;
    bool has_edge(int a, int b) const;

    // Directed-edge indexing shared by the BP engine and the error model.
    // Directed edge e = (src -> dst); both orientations of every undirected
    // edge are present.
    int directed_count() const { return static_cast<int>(dir_src_.size()); }
    int directed_index(int src, int dst) const;  // -1 if absent
    int dir_src(int e) const { return dir_src_[e]; }
    int dir_dst(int e) const { return dir_dst_[e]; }
    int reverse_edge(int e) const { return dir_reverse_[e]; }
    // directed edges (n -> src(e)) with n != dst(e); the BP recursion input set
    const std::vector<int>& upstream(int e) const { return dir_upstream_[e]; }
    const std::vector<int>& in_edges(int node) const { return in_edges_[node]; }

private:
    int node_count_;
    std::vector<std::pair<int, int>> edges_;
    std::vector<std::vector<int>> neighbors_;
    std::vector<int> dir_src_, dir_dst_, dir_reverse_;
    std::vector<std::vector<int>> dir_upstream_;
    std::vector<std::vector<int>> in_edges_;
};

// Symmetric pairwise couplings J on the edge set plus per-node offsets theta.
class CouplingSet {
public:
    CouplingSet() = default;
    CouplingSet(const Topology& topology, double uniform_j);
    CouplingSet(const Topology& topology, std::vector<double> per_edge_j,
                std::vector<double> theta);

    double j(int edge_index) const { return j_[edge_index]; }
    double j(const Topology& topology, int a, int b) const;
    double theta(int node) const { return theta_[node]; }
    int edge_count() const { return static_cast<int>(j_.size()); }

private:
    std::vector<double> j_;
    std::vector<double> theta_;
};

struct ConvergenceVerdict {
    bool contraction_ok = false;
    double spectral_radius = 0.0;
    bool spectral_ok = false;
    double contraction_threshold = 0.0;  // c-tilde; +inf when max degree <= 1
};

// N x N linearization coefficients; entry (j, k) is the coefficient applied
// by the message k -> j. Zero off the edge set, zero diagonal.
class CoefficientMatrix {
public:
    CoefficientMatrix(const Topology& topology, const CouplingSet& couplings);
    // direct construction from arbitrary per-entry coefficients (used when
    // deploying optimized fusion coefficients as message weights)
    CoefficientMatrix(const Topology& topology, const Eigen::MatrixXd& c);

    const Eigen::MatrixXd& c() const { return c_; }
    double coeff(int receiver, int sender) const { return c_(receiver, sender); }
    const Topology& topology() const { return *topology_; }

private:
    const Topology* topology_;
    Eigen::MatrixXd c_;
};

// c = (e^{2J} - 1) / (1 + e^J)^2, identical to tanh(J/2)
double coefficient_from_coupling(double j);

CoefficientMatrix build_coefficient_matrix(const Topology& topology,
                                           const CouplingSet& couplings);

ConvergenceVerdict check_convergence(const CoefficientMatrix& c,
                                     const Topology& topology);

// Exact fixed-point combining matrix of the linear message iteration:
// lambda = A^T gamma at the fixed point. Solves the directed-edge linear
// system, so backtracking walks are excluded and the result matches the
// engine's empirical fixed point to machine precision.
Eigen::MatrixXd combining_matrix(const CoefficientMatrix& c);

// Geometric-series form A = I + sum C^n - D(sum C^n). This is the small-c
// approximation of combining_matrix (it counts backtracking walks); kept as
// an independent cross-check route.
Eigen::MatrixXd combining_matrix_series(const CoefficientMatrix& c,
                                        int max_terms = 500,
                                        double tail_tol = 1e-12);

// Pairwise log-odds plug-in with additive smoothing of 0.5 per joint cell.
// state_window is T x N (row = slot).
CouplingSet estimate_couplings(const Topology& topology,
                               const std::vector<std::vector<std::uint8_t>>& state_window);

}  // namespace bpdet
