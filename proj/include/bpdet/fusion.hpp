#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "bpdet/graph.hpp"
#include "bpdet/scenario.hpp"

namespace bpdet {

// Per-node two-stage fusion output over the closed neighborhood M_j
// (ordering: neighbors ascending, then j itself last — see neighborhood_of).
struct FusionWeights {
    std::vector<Eigen::VectorXd> c;       // unit-norm stage-one coefficients
    std::vector<Eigen::VectorXd> w;       // unit-norm stage-two weights
    Eigen::VectorXd tau;                  // per-node thresholds
    std::vector<std::vector<int>> members;  // M_j node indices per node
};

// M_j = N_j sorted ascending, then j appended; index of j is degree(j)
std::vector<int> neighborhood_of(const Topology& topology, int node);

// w* = Sigma^{-1} delta / ||Sigma^{-1} delta||, sign fixed so w^T delta >= 0
Eigen::VectorXd maximize_deflection(const Eigen::VectorXd& delta, const Eigen::MatrixXd& sigma);

double deflection(const Eigen::VectorXd& w, const Eigen::VectorXd& delta,
                  const Eigen::MatrixXd& sigma);

// Stage one: maximize (c^T delta)^2 / (c^T (Sigma_{gamma|0} + Sigma_eps) c)
Eigen::VectorXd stage_one(const LocalStats& stats, const Eigen::MatrixXd& sigma_le_local);

// Stage two: delta_hat = c* o delta, Sigma_chi|0 = c* c*^T o (Sigma_{gamma|0}+Sigma_eps),
// maximize over w with denominator Sigma_chi|0 + Sigma_nu
Eigen::VectorXd stage_two(const Eigen::VectorXd& c_star, const LocalStats& stats,
                          const Eigen::MatrixXd& sigma_le_local,
                          const Eigen::VectorXd& me_var_local);

// tau = Q^{-1}(alpha) * sqrt(var0) + mean0
double threshold_for_alpha(double alpha, double mean0, double var0);

// Rescale each node's coefficient vector so every off-self entry satisfies
// |c| < 0.99 * c_tilde (argmax direction preserved; untouched when feasible).
std::vector<Eigen::VectorXd> normalize_for_convergence(const std::vector<Eigen::VectorXd>& c,
                                                       const Topology& topology,
                                                       const std::vector<std::vector<int>>& members);

struct EtaTestResult {
    Eigen::VectorXd selected;
    std::vector<std::uint8_t> used_bp;    // per entry: 1 when the BP coefficient won
    bool zero_offline_flag = false;
};

// Entrywise: take c_bp(n) when c_bp(n)/c_offline(n) >= eta, else c_offline(n)
EtaTestResult eta_test(const Eigen::VectorXd& c_offline, const Eigen::VectorXd& c_bp, double eta);

// Structured-text round trip so adaptation output can seed later runs.
void save_fusion_weights(const FusionWeights& weights, const std::string& path);
FusionWeights load_fusion_weights(const std::string& path);

// Deployment of two-stage weights as a weighted linear BP: message
// coefficients from the normalized c*, per-node decision weights chosen so
// the first-order gamma coefficients are proportional to w* o c* with the
// self term fixed at 1.
struct DeployedDetector {
    Eigen::MatrixXd message_coefficients;            // C-bar, row = receiver
    std::vector<std::vector<double>> decision_weights;  // aligned with in_edges(j)
};
DeployedDetector deploy_fusion_weights(const FusionWeights& weights, const Topology& topology);

}  // namespace bpdet
