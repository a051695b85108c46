#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "bpdet/adaptation.hpp"
#include "bpdet/config.hpp"
#include "bpdet/errors.hpp"
#include "bpdet/fusion.hpp"
#include "bpdet/metrics.hpp"
#include "bpdet/scenario.hpp"

namespace bpdet {

// Disjoint trial-index spaces so calibration / adaptation / statistics slots
// never share random streams with detection trials.
namespace trial_space {
inline constexpr std::uint64_t detection = 0;
inline constexpr std::uint64_t calibration = std::uint64_t{1} << 40;
inline constexpr std::uint64_t adaptation = std::uint64_t{2} << 40;
inline constexpr std::uint64_t statistics = std::uint64_t{3} << 40;
}  // namespace trial_space

struct SlotData {
    Eigen::VectorXd gamma;            // local statistics with theta folded in
    std::vector<std::uint8_t> x;      // true node states
};

// One detection slot; all randomness from (master, trial, substream::signal).
SlotData simulate_slot(const ScenarioConfig& scenario, const SignatureSet& signatures,
                       const CouplingSet& couplings, std::uint64_t master, std::uint64_t trial);

struct CalibrationRun {
    std::vector<double> reference_powers;  // E[|gamma_j|^2]
    Eigen::MatrixXd second_moment;         // E[gamma gamma^T]
    int slots = 0;
};

// Error-free pre-run in the calibration trial space.
CalibrationRun calibrate_reference(const ExperimentSpec& spec, const SignatureSet& signatures);

// threads <= 1 selects the serial reference path; > 1 runs the trial loop on
// that many workers. Outputs are bit-identical across thread counts.
MetricsTable run_dsnr_recipe(const ExperimentSpec& spec, int threads);
// Analytical tables only: fixed-point MSE predictions, the averaging-decision
// variant, and the iteration-indexed message-error bound. No Monte Carlo
// beyond the error-free calibration pre-run.
MetricsTable predict_tables(const ExperimentSpec& spec);
MetricsTable run_roc_recipe(const ExperimentSpec& spec, int threads);
MetricsTable run_recipe(const ExperimentSpec& spec, int threads);

// Known-statistics two-stage weights: conditional moments from a labelled
// clean run in the statistics trial space, LE/ME covariances from the
// calibrated sampler.
FusionWeights optimize_known_statistics(const ExperimentSpec& spec,
                                        const SignatureSet& signatures,
                                        const CalibratedErrorSampler& sampler, int slots);

// Blind path: erroneous window from the adaptation trial space, then the
// offline adaptation loop.
FusionWeights adapt_blind(const ExperimentSpec& spec, const SignatureSet& signatures,
                          const CalibratedErrorSampler& sampler,
                          AdaptationDiagnostics* diagnostics = nullptr);

// x-interpolated detection probability at a target false-alarm rate from the
// network-average (pf, pd) sweep records of one variant.
double pd_at_pf(const MetricsTable& table, const std::string& variant, double pf_target);

}  // namespace bpdet
