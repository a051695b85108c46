#pragma once

#include <Eigen/Dense>
#include <vector>

#include "bpdet/errors.hpp"
#include "bpdet/graph.hpp"
#include "bpdet/scenario.hpp"

namespace bpdet {

// E[|xi_j|^2] = a_j^T Sigma_eps a_j + tr(Sigma_nu_j)
double predict_mse_bp(const Eigen::VectorXd& a_row, const Eigen::MatrixXd& sigma_le,
                      double me_trace);
// ABP variant: ME part divided by (L+1)
double predict_mse_abp(const Eigen::VectorXd& a_row, const Eigen::MatrixXd& sigma_le,
                       double me_trace, int window);

struct IhlerBoundParams {
    std::vector<double> log_dyn_range;   // per undirected edge: ln d(psi)^2 = |J|
    std::vector<double> ln_u_sq;         // per directed edge: (ln u)^2, ME strength
};

IhlerBoundParams ihler_params_from(const Topology& topology, const CouplingSet& couplings,
                                   const CalibratedErrorSampler& sampler);

// Per-node bound on E[|lambda~_j^(l) - lambda_j^(*)|^2] for each iteration
// 1..iters (row l-1 = iteration l).
std::vector<Eigen::VectorXd> ihler_bound(const Topology& topology,
                                         const IhlerBoundParams& params, int iters);

struct DsnrReport {
    Eigen::VectorXd per_node_db;
    double network_avg_db = 0.0;         // ratio of node-summed powers, in dB
    Eigen::VectorXd clean_power;         // per-node E[|lambda*|^2]
    Eigen::VectorXd error_power;         // per-node E[|lambda~-lambda*|^2]
    bool capped = false;
    int samples = 0;
};

inline constexpr double kDbCap = 100.0;

double to_db_capped(double ratio, bool* capped = nullptr);

// clean and dirty are samples x N matrices from paired runs
DsnrReport empirical_dsnr(const Eigen::MatrixXd& clean, const Eigen::MatrixXd& dirty);

// Per-node first/second conditional moments of the (erroneous) local
// statistic given the node's own state.
struct NodeConditionalMoments {
    Eigen::VectorXd mean0, mean1, var0, var1;  // length N
};

// One Gaussian component of the decision-variable mixture: weight and exact
// per-node moments of gamma under that joint-state component.
struct MixtureComponent {
    double weight = 0.0;
    Eigen::VectorXd mean;   // E[gamma_i | component]
    Eigen::VectorXd var;    // Var[gamma_i | component]
    std::vector<std::uint8_t> x;  // node states of the component
};

// Mixture components from a joint state prior and per-node-state moments
// (the Eq.-(40)-style enumeration over b in {0,1}^N with per-node stats).
std::vector<MixtureComponent> mixture_from_prior(const StatePrior& prior,
                                                 const NodeConditionalMoments& moments);

// Components enumerated over transmitter on/off configurations with exact
// per-node statistic moments (noncentral-chi-square for energy, Gaussian for
// matched filter). Sharper than mixture_from_prior when several transmitters
// superpose at a node.
std::vector<MixtureComponent> scenario_mixture_components(const ScenarioConfig& config,
                                                          const SignatureSet& signatures);

// Exact MRF prior over x by enumeration of Eq.-(9)-type weights; N <= 15.
StatePrior mrf_state_prior(const Topology& topology, const CouplingSet& couplings);

struct RatePair {
    double p_f = 0.0;
    double p_d = 0.0;
};

double q_function(double z);
double q_inverse(double p);

// Gaussian-form rates of the two-stage statistic (Eqs. 52-54):
// mean_b = v^T mu_b, var_b = v^T (Sigma_{gamma|b} + Sigma_eps) v + w^T Sigma_nu w
RatePair gaussian_form_rates(double tau, const Eigen::VectorXd& c, const Eigen::VectorXd& w,
                             const LocalStats& stats, const Eigen::MatrixXd& sigma_le_local,
                             const Eigen::VectorXd& me_var_local);

// Mixture-form rates of the linear-BP decision variable at node j:
// lambda~_j = sum_i a_ji gamma~_i + sum MEs. Components carry exact per-state
// moments; LE/ME variances enter through sigma_le diag and me_trace.
RatePair mixture_form_rates(double tau, int node, const Eigen::VectorXd& a_row,
                            const std::vector<MixtureComponent>& components,
                            const Eigen::VectorXd& le_var, double me_trace);

}  // namespace bpdet
