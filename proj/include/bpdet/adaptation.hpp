#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "bpdet/errors.hpp"
#include "bpdet/fusion.hpp"
#include "bpdet/graph.hpp"
#include "bpdet/rng.hpp"

namespace bpdet {

struct AdaptationConfig {
    int kappa_max = 30;
    double eta = 2.0;
    int link_copies = 10;          // L: link averaging and ABP window
    int abp_iterations = 30;
    double alpha = 0.1;            // final false-alarm target
    // extrapolation factor on successive first-stage coefficient updates;
    // the relabel/re-fit map contracts slowly, this shortens the crawl
    double over_relaxation = 0.5;
    // when set, initial labels compare the raw window against these
    // thresholds; default: median split of an error-free linear-BP statistic
    std::optional<Eigen::VectorXd> tau0;
};

struct AdaptationDiagnostics {
    struct Row {
        int kappa;
        int node;
        Eigen::VectorXd c;
        double tau;
        int label_flips;           // vs previous kappa
    };
    std::vector<Row> rows;
    std::vector<std::uint8_t> fallback_bp;  // per node: single-valued label window
};

// label window x_hat[t][j] = 1{llr_window(t, j) > tau0[j]}
std::vector<std::vector<std::uint8_t>> initialize_outcomes(const Eigen::MatrixXd& llr_window,
                                                           const Eigen::VectorXd& tau0);

// gamma_bar(t, k) = gamma~_(t, k) + mean of L fresh link-error draws from the
// k-column's outgoing ME distribution; also returns the single-copy (raw)
// view used for ME-variance estimation.
struct AveragedWindow {
    Eigen::MatrixXd averaged;  // gamma-bar, T x N
    Eigen::MatrixXd raw;       // gamma~ + one error draw, T x N
};
AveragedWindow build_averaged_window(const Eigen::MatrixXd& llr_window,
                                     const CalibratedErrorSampler& sampler,
                                     const Topology& topology, int link_copies, RngStream& rng);

// Var[nu] ~= Var[raw] - Var[averaged], clamped at zero
double estimate_me_variance(const Eigen::VectorXd& raw_samples,
                            const Eigen::VectorXd& averaged_samples, bool* clamped = nullptr);

// Blind learning-adaptation loop over a stored window of erroneous local
// likelihoods: iterative relabel/re-fit of the first-stage coefficients,
// second-stage weights from the final labels, empirical threshold
// recalibration at the target false-alarm rate.
FusionWeights run_offline_adaptation(const Eigen::MatrixXd& llr_window,
                                     const AveragedWindow& averaged,
                                     const AdaptationConfig& config, const Topology& topology,
                                     const CouplingSet& couplings,
                                     AdaptationDiagnostics* diagnostics = nullptr);

}  // namespace bpdet
