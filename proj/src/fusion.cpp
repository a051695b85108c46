#include "bpdet/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "bpdet/analysis.hpp"

namespace bpdet {

std::vector<int> neighborhood_of(const Topology& topology, int node) {
    std::vector<int> m = topology.neighbors(node);
    m.push_back(node);
    return m;
}

namespace {
Eigen::MatrixXd regularized(const Eigen::MatrixXd& sigma) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(sigma);
    double smax = svd.singularValues()(0);
    double smin = svd.singularValues()(svd.singularValues().size() - 1);
    if (smin > 0 && smax / smin < 1e12) return sigma;
    double ridge = 1e-9 * sigma.trace() / sigma.rows();
    if (ridge <= 0) ridge = 1e-12;
    return sigma + ridge * Eigen::MatrixXd::Identity(sigma.rows(), sigma.cols());
}
}  // namespace

Eigen::VectorXd maximize_deflection(const Eigen::VectorXd& delta, const Eigen::MatrixXd& sigma) {
    if (delta.size() != sigma.rows() || sigma.rows() != sigma.cols())
        throw std::invalid_argument("maximize_deflection: dimension mismatch");
    if (delta.norm() == 0.0)
        throw std::invalid_argument("maximize_deflection: zero delta, no discriminative signal");
    Eigen::VectorXd w = regularized(sigma).ldlt().solve(delta);
    w /= w.norm();
    if (w.dot(delta) < 0) w = -w;
    return w;
}

double deflection(const Eigen::VectorXd& w, const Eigen::VectorXd& delta,
                  const Eigen::MatrixXd& sigma) {
    double num = w.dot(delta);
    return num * num / w.dot(sigma * w);
}

Eigen::VectorXd stage_one(const LocalStats& stats, const Eigen::MatrixXd& sigma_le_local) {
    return maximize_deflection(stats.delta, stats.cov0 + sigma_le_local);
}

Eigen::VectorXd stage_two(const Eigen::VectorXd& c_star, const LocalStats& stats,
                          const Eigen::MatrixXd& sigma_le_local,
                          const Eigen::VectorXd& me_var_local) {
    Eigen::VectorXd delta_hat = c_star.cwiseProduct(stats.delta);
    Eigen::MatrixXd sigma_chi =
        (c_star * c_star.transpose()).cwiseProduct(stats.cov0 + sigma_le_local);
    Eigen::MatrixXd denom = sigma_chi;
    denom.diagonal() += me_var_local;
    return maximize_deflection(delta_hat, denom);
}

double threshold_for_alpha(double alpha, double mean0, double var0) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("threshold_for_alpha: alpha in (0,1)");
    if (!(var0 > 0.0)) throw std::invalid_argument("threshold_for_alpha: var0 must be positive");
    return q_inverse(alpha) * std::sqrt(var0) + mean0;
}

std::vector<Eigen::VectorXd> normalize_for_convergence(
    const std::vector<Eigen::VectorXd>& c, const Topology& topology,
    const std::vector<std::vector<int>>& members) {
    int max_deg = topology.max_degree();
    double c_tilde = (max_deg <= 1) ? std::numeric_limits<double>::infinity()
                                    : 1.0 / (max_deg - 1);
    std::vector<Eigen::VectorXd> out = c;
    for (size_t j = 0; j < c.size(); ++j) {
        double worst = 0.0;
        for (int i = 0; i + 1 < static_cast<int>(members[j].size()); ++i)  // off-self entries
            worst = std::max(worst, std::abs(c[j][i]));
        if (std::isfinite(c_tilde) && worst >= c_tilde)
            out[j] *= 0.99 * c_tilde / worst;
    }
    return out;
}

EtaTestResult eta_test(const Eigen::VectorXd& c_offline, const Eigen::VectorXd& c_bp, double eta) {
    if (c_offline.size() != c_bp.size()) throw std::invalid_argument("eta_test: length mismatch");
    EtaTestResult r;
    r.selected = c_offline;
    r.used_bp.assign(c_offline.size(), 0);
    for (int n = 0; n < c_offline.size(); ++n) {
        bool take_bp;
        if (c_offline[n] == 0.0) {
            take_bp = true;  // ratio treated as +inf
            r.zero_offline_flag = true;
        } else {
            take_bp = (c_bp[n] / c_offline[n] >= eta);
        }
        if (take_bp) {
            r.selected[n] = c_bp[n];
            r.used_bp[n] = 1;
        }
    }
    return r;
}

void save_fusion_weights(const FusionWeights& weights, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("save_fusion_weights: cannot write " + path);
    f.precision(17);
    f << "nodes " << weights.c.size() << "\n";
    for (size_t j = 0; j < weights.c.size(); ++j) {
        f << "node " << j + 1 << "\n";
        f << "members";
        for (int m : weights.members[j]) f << ' ' << m + 1;
        f << "\nc";
        for (int i = 0; i < weights.c[j].size(); ++i) f << ' ' << weights.c[j][i];
        f << "\nw";
        for (int i = 0; i < weights.w[j].size(); ++i) f << ' ' << weights.w[j][i];
        f << "\ntau " << weights.tau[j] << "\n";
    }
}

FusionWeights load_fusion_weights(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("load_fusion_weights: cannot read " + path);
    std::string tok;
    std::size_t n = 0;
    f >> tok >> n;
    if (tok != "nodes" || n == 0) throw std::runtime_error("load_fusion_weights: bad header");
    FusionWeights w;
    w.c.resize(n);
    w.w.resize(n);
    w.tau.resize(static_cast<int>(n));
    w.members.resize(n);
    for (size_t j = 0; j < n; ++j) {
        size_t label;
        f >> tok >> label;
        if (tok != "node" || label != j + 1) throw std::runtime_error("load_fusion_weights: bad node block");
        f >> tok;
        std::string line;
        std::getline(f, line);
        std::istringstream ms(line);
        int m;
        while (ms >> m) w.members[j].push_back(m - 1);
        auto read_vec = [&](const char* name) {
            f >> tok;
            if (tok != name) throw std::runtime_error("load_fusion_weights: expected " + std::string(name));
            std::getline(f, line);
            std::istringstream vs(line);
            std::vector<double> vals;
            double v;
            while (vs >> v) vals.push_back(v);
            Eigen::VectorXd out(vals.size());
            for (size_t i = 0; i < vals.size(); ++i) out[static_cast<int>(i)] = vals[i];
            return out;
        };
        w.c[j] = read_vec("c");
        w.w[j] = read_vec("w");
        f >> tok >> w.tau[static_cast<int>(j)];
        if (tok != "tau") throw std::runtime_error("load_fusion_weights: expected tau");
    }
    return w;
}

DeployedDetector deploy_fusion_weights(const FusionWeights& weights, const Topology& topology) {
    int n = topology.node_count();
    auto c_bar = normalize_for_convergence(weights.c, topology, weights.members);
    DeployedDetector d;
    d.message_coefficients = Eigen::MatrixXd::Zero(n, n);
    d.decision_weights.resize(n);
    for (int j = 0; j < n; ++j) {
        const auto& members = weights.members[j];
        int self = static_cast<int>(members.size()) - 1;
        double self_vc = weights.w[j][self] * weights.c[j][self];
        if (self_vc == 0.0)
            throw std::runtime_error("deploy_fusion_weights: vanishing self weight");
        // per-node rescale applied by normalize_for_convergence
        double beta = c_bar[j].norm() / weights.c[j].norm();
        for (int i = 0; i < self; ++i) {
            int k = members[i];
            double cb = c_bar[j][i];
            d.message_coefficients(j, k) = cb;
        }
        const auto& in = topology.in_edges(j);
        d.decision_weights[j].resize(in.size());
        for (size_t e = 0; e < in.size(); ++e) {
            int k = topology.dir_src(in[e]);
            // member index of sender k (neighbors are sorted ascending)
            int i = static_cast<int>(std::lower_bound(members.begin(), members.end() - 1, k) -
                                     members.begin());
            d.decision_weights[j][e] = weights.w[j][i] / (self_vc * beta);
        }
    }
    return d;
}

}  // namespace bpdet
