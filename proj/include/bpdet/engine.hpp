#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "bpdet/errors.hpp"
#include "bpdet/graph.hpp"
#include "bpdet/rng.hpp"

namespace bpdet {

enum class BpMode { exact, linear };

// log-domain pairwise update S(a,b) = ln[(1+e^{a+b})/(e^a+e^b)],
// evaluated as logaddexp(0, a+b) - logaddexp(a, b)
double s_transform(double a, double b);

enum class DecisionVariant { plain, weighted, averaged };

struct DecisionVariables {
    Eigen::VectorXd lambda;
    DecisionVariant variant = DecisionVariant::plain;
    int iteration = 0;
};

// Synchronous (flooding) schedule, zero-initialized messages. One engine
// instance per trial; ME draws are fresh per directed edge per iteration,
// LE is the caller's responsibility (baked into the llr vector per slot).
class BpEngine {
public:
    BpEngine(const Topology& topology, const CouplingSet& couplings, BpMode mode);
    // linear mode with explicit coefficients (optimized-fusion deployment)
    BpEngine(const CoefficientMatrix& coefficients);

    void reset();
    // one synchronous sweep; sampler null => error-free messages
    void iterate(const Eigen::VectorXd& llrs, const CalibratedErrorSampler* sampler,
                 RngStream* rng);

    int iteration() const { return iteration_; }
    double message(int directed_edge) const { return m_[directed_edge]; }
    const std::vector<double>& messages() const { return m_; }
    double max_message_delta() const { return max_delta_; }

    DecisionVariables decision_variables(const Eigen::VectorXd& llrs) const;
    // per-node weights over in-messages; weights[j][i] pairs with
    // topology.in_edges(j)[i]
    DecisionVariables weighted_decision(const Eigen::VectorXd& llrs,
                                        const std::vector<std::vector<double>>& weights) const;
    // running-average decision over the last window+1 iterations (all
    // iterations so far when fewer are available)
    DecisionVariables abp_decision(const Eigen::VectorXd& llrs, int window) const;
    // averaged messages as in abp_decision combined with per-node in-edge
    // weights as in weighted_decision
    DecisionVariables weighted_abp_decision(const Eigen::VectorXd& llrs,
                                            const std::vector<std::vector<double>>& weights,
                                            int window) const;

    const Topology& topology() const { return *topology_; }

private:
    void ensure_history(int upto);

    const Topology* topology_;
    BpMode mode_;
    std::vector<double> coupling_per_edge_;   // J for exact mode, per directed edge
    std::vector<double> coeff_per_edge_;      // c for linear mode, per directed edge
    std::vector<double> m_, m_prev_;
    std::vector<double> running_sum_;         // sum of messages since iteration 1
    std::vector<std::vector<double>> history_; // history_[l-1][e], for windowed ABP
    int iteration_ = 0;
    double max_delta_ = 0.0;
};

// Convenience: run `iters` error-free iterations and return the plain decision.
DecisionVariables run_plain_bp(const Topology& topology, const CouplingSet& couplings,
                               BpMode mode, const Eigen::VectorXd& llrs, int iters);

// Error-free linear fixed point via iteration to numerical convergence.
Eigen::VectorXd linear_fixed_point(const CoefficientMatrix& coefficients,
                                   const Eigen::VectorXd& llrs, double tol = 1e-14,
                                   int max_iters = 10000);

}  // namespace bpdet
