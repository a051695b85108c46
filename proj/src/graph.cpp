#include "bpdet/graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

namespace bpdet {

Topology::Topology(int node_count, std::vector<std::pair<int, int>> edges)
    : node_count_(node_count), edges_(std::move(edges)) {
    if (node_count_ <= 0) throw std::invalid_argument("topology: node_count must be positive");
    std::set<std::pair<int, int>> seen;
    for (auto& [a, b] : edges_) {
        if (a == b) throw std::invalid_argument("topology: self-loop");
        if (a > b) std::swap(a, b);
        if (a < 0 || b >= node_count_) throw std::invalid_argument("topology: node index out of range");
        if (!seen.insert({a, b}).second) throw std::invalid_argument("topology: duplicate edge");
    }
    std::sort(edges_.begin(), edges_.end());
    neighbors_.resize(node_count_);
    for (auto [a, b] : edges_) {
        neighbors_[a].push_back(b);
        neighbors_[b].push_back(a);
    }
    for (auto& nb : neighbors_) std::sort(nb.begin(), nb.end());

    // directed edges: both orientations, ordered by (src, dst)
    for (auto [a, b] : edges_) {
        dir_src_.push_back(a);
        dir_dst_.push_back(b);
        dir_src_.push_back(b);
        dir_dst_.push_back(a);
    }
    std::vector<int> order(dir_src_.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    std::sort(order.begin(), order.end(), [&](int x, int y) {
        return std::pair{dir_src_[x], dir_dst_[x]} < std::pair{dir_src_[y], dir_dst_[y]};
    });
    std::vector<int> src, dst;
    for (int i : order) {
        src.push_back(dir_src_[i]);
        dst.push_back(dir_dst_[i]);
    }
    dir_src_ = src;
    dir_dst_ = dst;

    dir_reverse_.resize(dir_src_.size());
    dir_upstream_.resize(dir_src_.size());
    in_edges_.resize(node_count_);
    for (int e = 0; e < directed_count(); ++e) in_edges_[dir_dst_[e]].push_back(e);
    for (int e = 0; e < directed_count(); ++e) {
        dir_reverse_[e] = directed_index(dir_dst_[e], dir_src_[e]);
        for (int f : in_edges_[dir_src_[e]])
            if (dir_src_[f] != dir_dst_[e]) dir_upstream_[e].push_back(f);
    }
}

int Topology::max_degree() const {
    int d = 0;
    for (int n = 0; n < node_count_; ++n) d = std::max(d, degree(n));
    return d;
}

bool Topology::has_edge(int a, int b) const {
    if (a > b) std::swap(a, b);
    return std::binary_search(edges_.begin(), edges_.end(), std::pair{a, b});
}

int Topology::directed_index(int src, int dst) const {
    auto it = std::lower_bound(dir_src_.begin(), dir_src_.end(), src);
    for (size_t i = it - dir_src_.begin(); i < dir_src_.size() && dir_src_[i] == src; ++i)
        if (dir_dst_[i] == dst) return static_cast<int>(i);
    return -1;
}

CouplingSet::CouplingSet(const Topology& topology, double uniform_j)
    : j_(topology.edge_count(), uniform_j), theta_(topology.node_count(), 0.0) {
    if (!std::isfinite(uniform_j)) throw std::invalid_argument("couplings: J must be finite");
}

CouplingSet::CouplingSet(const Topology& topology, std::vector<double> per_edge_j,
                         std::vector<double> theta)
    : j_(std::move(per_edge_j)), theta_(std::move(theta)) {
    if (static_cast<int>(j_.size()) != topology.edge_count())
        throw std::invalid_argument("couplings: missing coupling for some edge");
    if (static_cast<int>(theta_.size()) != topology.node_count())
        throw std::invalid_argument("couplings: theta size mismatch");
    for (double v : j_)
        if (!std::isfinite(v)) throw std::invalid_argument("couplings: J must be finite");
    for (double v : theta_)
        if (!std::isfinite(v)) throw std::invalid_argument("couplings: theta must be finite");
}

double CouplingSet::j(const Topology& topology, int a, int b) const {
    if (a > b) std::swap(a, b);
    const auto& edges = topology.edges();
    auto it = std::lower_bound(edges.begin(), edges.end(), std::pair{a, b});
    if (it == edges.end() || *it != std::pair{a, b})
        throw std::invalid_argument("couplings: not an edge");
    return j_[it - edges.begin()];
}

double coefficient_from_coupling(double j) { return std::tanh(0.5 * j); }

CoefficientMatrix::CoefficientMatrix(const Topology& topology, const CouplingSet& couplings)
    : topology_(&topology), c_(Eigen::MatrixXd::Zero(topology.node_count(), topology.node_count())) {
    const auto& edges = topology.edges();
    for (int e = 0; e < topology.edge_count(); ++e) {
        double c = coefficient_from_coupling(couplings.j(e));
        c_(edges[e].first, edges[e].second) = c;
        c_(edges[e].second, edges[e].first) = c;
    }
}

CoefficientMatrix::CoefficientMatrix(const Topology& topology, const Eigen::MatrixXd& c)
    : topology_(&topology), c_(c) {
    if (c_.rows() != topology.node_count() || c_.cols() != topology.node_count())
        throw std::invalid_argument("coefficient matrix: shape mismatch");
    for (int j = 0; j < c_.rows(); ++j)
        for (int k = 0; k < c_.cols(); ++k)
            if (c_(j, k) != 0.0 && !topology.has_edge(j, k))
                throw std::invalid_argument("coefficient matrix: nonzero off edge set");
}

CoefficientMatrix build_coefficient_matrix(const Topology& topology, const CouplingSet& couplings) {
    return CoefficientMatrix(topology, couplings);
}

ConvergenceVerdict check_convergence(const CoefficientMatrix& cm, const Topology& topology) {
    ConvergenceVerdict v;
    int max_deg = topology.max_degree();
    v.contraction_threshold =
        (max_deg <= 1) ? std::numeric_limits<double>::infinity() : 1.0 / (max_deg - 1);
    v.contraction_ok = true;
    for (auto [a, b] : topology.edges()) {
        if (std::abs(cm.coeff(a, b)) >= v.contraction_threshold ||
            std::abs(cm.coeff(b, a)) >= v.contraction_threshold)
            v.contraction_ok = false;
    }

    // Power iteration on C^T C; sqrt of its dominant eigenvalue is the largest
    // singular value, which equals the spectral radius for symmetric C and
    // upper-bounds it otherwise.
    const Eigen::MatrixXd& c = cm.c();
    int n = static_cast<int>(c.rows());
    Eigen::VectorXd x = Eigen::VectorXd::Ones(n) / std::sqrt(static_cast<double>(n));
    double lambda = 0.0;
    for (int it = 0; it < 200; ++it) {
        Eigen::VectorXd y = c.transpose() * (c * x);
        double norm = y.norm();
        if (norm == 0.0) {
            lambda = 0.0;
            break;
        }
        double next = x.dot(y);
        x = y / norm;
        if (it > 0 && std::abs(next - lambda) <= 1e-9 * std::max(1.0, std::abs(next))) {
            lambda = next;
            break;
        }
        lambda = next;
    }
    v.spectral_radius = std::sqrt(std::max(0.0, lambda));
    v.spectral_ok = v.spectral_radius < 1.0;
    return v;
}

Eigen::MatrixXd combining_matrix(const CoefficientMatrix& cm) {
    const Topology& t = cm.topology();
    auto verdict = check_convergence(cm, t);
    if (!verdict.spectral_ok)
        throw std::runtime_error("combining_matrix: spectral radius >= 1, series diverges");

    // Directed-edge fixed point: m_e = c_(dst,src) * (gamma_src + sum over
    // upstream edges). Solve (I - T) M = R where rows of M give the gamma
    // coefficients of each directed-edge message.
    int ne = t.directed_count();
    int n = t.node_count();
    Eigen::MatrixXd sys = Eigen::MatrixXd::Identity(ne, ne);
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(ne, n);
    for (int e = 0; e < ne; ++e) {
        double c = cm.coeff(t.dir_dst(e), t.dir_src(e));
        rhs(e, t.dir_src(e)) = c;
        for (int f : t.upstream(e)) sys(e, f) -= c;
    }
    Eigen::MatrixXd m = sys.partialPivLu().solve(rhs);

    // lambda_j = gamma_j + sum_{e into j} m_e; A(i, j) = a_{ji} = d lambda_j / d gamma_i
    Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n);
    for (int j = 0; j < n; ++j)
        for (int e : t.in_edges(j)) a.col(j) += m.row(e).transpose();
    return a;
}

Eigen::MatrixXd combining_matrix_series(const CoefficientMatrix& cm, int max_terms,
                                        double tail_tol) {
    auto verdict = check_convergence(cm, cm.topology());
    if (!verdict.spectral_ok)
        throw std::runtime_error("combining_matrix_series: spectral radius >= 1");
    const Eigen::MatrixXd& c = cm.c();
    int n = static_cast<int>(c.rows());
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(n, n);
    Eigen::MatrixXd power = Eigen::MatrixXd::Identity(n, n);
    for (int k = 1; k <= max_terms; ++k) {
        power = power * c;
        sum += power;
        if (power.cwiseAbs().rowwise().sum().maxCoeff() < tail_tol) break;
    }
    Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n) + sum;
    a.diagonal() = Eigen::VectorXd::Ones(n);
    return a;
}

CouplingSet estimate_couplings(const Topology& topology,
                               const std::vector<std::vector<std::uint8_t>>& state_window) {
    const int t_len = static_cast<int>(state_window.size());
    if (t_len < 100) throw std::invalid_argument("estimate_couplings: need at least 100 rows");
    const int n = topology.node_count();
    for (const auto& row : state_window)
        if (static_cast<int>(row.size()) != n)
            throw std::invalid_argument("estimate_couplings: row width mismatch");

    std::vector<double> j(topology.edge_count());
    std::vector<double> theta(n);
    const double smooth = 0.5;
    for (int e = 0; e < topology.edge_count(); ++e) {
        auto [a, b] = topology.edges()[e];
        double n11 = smooth, n10 = smooth, n01 = smooth, n00 = smooth;
        for (const auto& row : state_window) {
            if (row[a] && row[b]) n11 += 1;
            else if (row[a]) n10 += 1;
            else if (row[b]) n01 += 1;
            else n00 += 1;
        }
        j[e] = 0.25 * std::log((n11 * n00) / (n10 * n01));
    }
    for (int k = 0; k < n; ++k) {
        double ones = smooth, zeros = smooth;
        for (const auto& row : state_window) (row[k] ? ones : zeros) += 1;
        theta[k] = std::log(ones / zeros);
    }
    return CouplingSet(topology, std::move(j), std::move(theta));
}

}  // namespace bpdet
