#include "bpdet/adaptation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "bpdet/engine.hpp"
#include "bpdet/scenario.hpp"

namespace bpdet {

std::vector<std::vector<std::uint8_t>> initialize_outcomes(const Eigen::MatrixXd& llr_window,
                                                           const Eigen::VectorXd& tau0) {
    if (tau0.size() != llr_window.cols())
        throw std::invalid_argument("initialize_outcomes: threshold length mismatch");
    std::vector<std::vector<std::uint8_t>> labels(
        llr_window.rows(), std::vector<std::uint8_t>(llr_window.cols()));
    for (int t = 0; t < llr_window.rows(); ++t)
        for (int j = 0; j < llr_window.cols(); ++j)
            labels[t][j] = llr_window(t, j) > tau0[j] ? 1 : 0;
    return labels;
}

namespace {
double outgoing_me_variance(const CalibratedErrorSampler& sampler, const Topology& topology,
                            int node) {
    // both outgoing edges of a node share one ME variance unless overridden;
    // use the first outgoing edge as the link model for gamma broadcasts
    for (int e = 0; e < topology.directed_count(); ++e)
        if (topology.dir_src(e) == node) return sampler.me_variance(e);
    return 0.0;
}

double sample_variance(const Eigen::VectorXd& v) {
    double mean = v.mean();
    return (v.array() - mean).square().sum() / (v.size() - 1);
}
}  // namespace

AveragedWindow build_averaged_window(const Eigen::MatrixXd& llr_window,
                                     const CalibratedErrorSampler& sampler,
                                     const Topology& topology, int link_copies, RngStream& rng) {
    if (link_copies < 1) throw std::invalid_argument("build_averaged_window: L >= 1");
    AveragedWindow out;
    out.averaged = llr_window;
    out.raw = llr_window;
    for (int k = 0; k < llr_window.cols(); ++k) {
        double var = outgoing_me_variance(sampler, topology, k);
        if (var <= 0) continue;
        double sd = std::sqrt(var);
        for (int t = 0; t < llr_window.rows(); ++t) {
            double first = sd * rng.normal();
            double sum = first;
            for (int c = 1; c < link_copies; ++c) sum += sd * rng.normal();
            out.raw(t, k) += first;
            out.averaged(t, k) += sum / link_copies;
        }
    }
    return out;
}

double estimate_me_variance(const Eigen::VectorXd& raw_samples,
                            const Eigen::VectorXd& averaged_samples, bool* clamped) {
    if (raw_samples.size() != averaged_samples.size() || raw_samples.size() < 100)
        throw std::invalid_argument("estimate_me_variance: need >= 100 paired samples");
    double diff = sample_variance(raw_samples) - sample_variance(averaged_samples);
    if (clamped) *clamped = diff < 0;
    return std::max(0.0, diff);
}

namespace {

Eigen::VectorXd normalized_bp_coefficients(const Topology& topology,
                                           const CouplingSet& couplings, int node) {
    auto members = neighborhood_of(topology, node);
    Eigen::VectorXd c(members.size());
    for (size_t i = 0; i + 1 < members.size(); ++i)
        c[static_cast<int>(i)] =
            coefficient_from_coupling(couplings.j(topology, members[i], node));
    c[static_cast<int>(members.size()) - 1] = 1.0;  // self term of the linear decision
    return c / c.norm();
}

bool labels_single_valued(const std::vector<std::vector<std::uint8_t>>& labels, int node) {
    int ones = 0, zeros = 0;
    for (const auto& row : labels) (row[node] ? ones : zeros) += 1;
    return ones < 2 || zeros < 2;
}

Eigen::MatrixXd submatrix(const Eigen::MatrixXd& m, const std::vector<int>& cols) {
    Eigen::MatrixXd out(m.rows(), cols.size());
    for (size_t i = 0; i < cols.size(); ++i) out.col(static_cast<int>(i)) = m.col(cols[i]);
    return out;
}

std::vector<std::uint8_t> column(const std::vector<std::vector<std::uint8_t>>& labels, int node) {
    std::vector<std::uint8_t> out(labels.size());
    for (size_t t = 0; t < labels.size(); ++t) out[t] = labels[t][node];
    return out;
}

double quantile_of(std::vector<double> v, double level) {
    size_t idx = static_cast<size_t>(level * (v.size() - 1));
    std::nth_element(v.begin(), v.begin() + idx, v.end());
    return v[idx];
}

}  // namespace

FusionWeights run_offline_adaptation(const Eigen::MatrixXd& llr_window,
                                     const AveragedWindow& averaged,
                                     const AdaptationConfig& config, const Topology& topology,
                                     const CouplingSet& couplings,
                                     AdaptationDiagnostics* diagnostics) {
    const int n = topology.node_count();
    const int t_len = static_cast<int>(llr_window.rows());
    if (t_len < 100) throw std::invalid_argument("run_offline_adaptation: window too short");

    Eigen::VectorXd tau0(n);
    std::vector<std::vector<std::uint8_t>> labels;
    if (config.tau0) {
        tau0 = *config.tau0;
        labels = initialize_outcomes(llr_window, tau0);
    } else {
        // median split of the legacy (error-free linear BP) decision
        // statistic: labels that already pool the neighbourhood are a much
        // better starting point than raw per-node thresholding, whose errors
        // are fully correlated with each node's own likelihood errors
        Eigen::MatrixXd stat(t_len, n);
        for (int t = 0; t < t_len; ++t) {
            BpEngine engine(topology, couplings, BpMode::linear);
            Eigen::VectorXd gamma = llr_window.row(t).transpose();
            for (int l = 0; l < config.abp_iterations; ++l) engine.iterate(gamma, nullptr, nullptr);
            stat.row(t) = engine.abp_decision(gamma, config.abp_iterations).lambda.transpose();
        }
        for (int j = 0; j < n; ++j) {
            std::vector<double> col(stat.col(j).data(), stat.col(j).data() + t_len);
            tau0[j] = quantile_of(std::move(col), 0.5);
        }
        labels = initialize_outcomes(stat, tau0);
    }

    std::vector<Eigen::VectorXd> c_bp(n), c_star(n), c_prev(n);
    std::vector<std::vector<int>> members(n);
    std::vector<std::uint8_t> fallback(n, 0);
    for (int j = 0; j < n; ++j) {
        members[j] = neighborhood_of(topology, j);
        c_bp[j] = normalized_bp_coefficients(topology, couplings, j);
        c_star[j] = c_bp[j];
        c_prev[j] = c_bp[j];
    }

    Eigen::VectorXd tau = tau0;
    auto prev_labels = labels;

    for (int kappa = 0; kappa <= config.kappa_max; ++kappa) {
        for (int j = 0; j < n; ++j) {
            if (labels_single_valued(labels, j)) {
                fallback[j] = 1;
                c_star[j] = c_bp[j];
                continue;
            }
            Eigen::MatrixXd window_j = submatrix(averaged.averaged, members[j]);
            LocalStats stats = estimate_conditional_stats(window_j, column(labels, j));
            // cov(gamma-bar | x_hat) already carries the LE contribution
            Eigen::MatrixXd zero =
                Eigen::MatrixXd::Zero(stats.cov0.rows(), stats.cov0.cols());
            Eigen::VectorXd c_kappa = stage_one(stats, zero);
            // over-relax successive first-stage solutions to speed up the
            // slow contraction of the relabel/re-fit fixed-point iteration
            if (config.over_relaxation > 0 && kappa > 0) {
                c_kappa += config.over_relaxation * (c_kappa - c_prev[j]);
                c_kappa /= c_kappa.norm();
            }
            c_prev[j] = c_kappa;
            // negative coefficients have no place in a same-sign fusion rule;
            // they mark an iterate drifting towards a sign-flipped optimum
            c_kappa = c_kappa.cwiseMax(0.0);
            if (c_kappa.norm() == 0.0)
                c_kappa = c_bp[j];
            else
                c_kappa /= c_kappa.norm();
            int self = static_cast<int>(members[j].size()) - 1;
            if (c_kappa[self] < 1e-3) {
                // degenerate local optimum; keep the linearized-BP direction
                c_star[j] = c_bp[j];
            } else {
                // eta-test on the self-normalized scale: ratios compare like
                // with like and the self entry is never replaced, so a small
                // self coefficient (a node distrusting its own noisy local
                // likelihood) survives the test
                Eigen::VectorXd c_off = c_kappa / c_kappa[self];
                Eigen::VectorXd c_ref = c_bp[j] / c_bp[j][self];
                Eigen::VectorXd sel = eta_test(c_off, c_ref, config.eta).selected;
                c_star[j] = sel / sel.norm();
            }

            if (diagnostics) {
                int flips = 0;
                for (int t = 0; t < t_len; ++t)
                    if (labels[t][j] != prev_labels[t][j]) ++flips;
                diagnostics->rows.push_back({kappa, j, c_star[j], tau[j], flips});
            }
        }
        if (kappa < config.kappa_max) {
            prev_labels = labels;
            // relabel each node from the one-hop fused statistic on the
            // link-averaged window. A full multi-hop offline BP is unstable
            // here: its higher-order terms leak the neighbouring nodes'
            // hypotheses into the labels, and the loop then locks onto the
            // wrong state variable. Thresholds are set by quantile matching,
            // keeping each node's positive rate from the previous pass;
            // closed-form (Gaussian) thresholds proved too fragile under
            // label noise.
            for (int j = 0; j < n; ++j) {
                int dim = static_cast<int>(members[j].size());
                Eigen::VectorXd eff = c_star[j] / c_star[j][dim - 1];
                Eigen::VectorXd s = Eigen::VectorXd::Zero(t_len);
                for (int i = 0; i < dim; ++i)
                    s += eff[i] * averaged.averaged.col(members[j][i]);
                double rate = 0.0;
                for (int t = 0; t < t_len; ++t) rate += labels[t][j];
                rate /= t_len;
                std::vector<double> sv(s.data(), s.data() + t_len);
                tau[j] = quantile_of(std::move(sv), std::clamp(1.0 - rate, 0.02, 0.98));
                for (int t = 0; t < t_len; ++t) labels[t][j] = s[t] > tau[j] ? 1 : 0;
            }
        }
    }

    // stage two on the final label window with estimated ME variances
    std::vector<double> me_var_sender(n);
    for (int k = 0; k < n; ++k)
        me_var_sender[k] = estimate_me_variance(averaged.raw.col(k), averaged.averaged.col(k));

    FusionWeights out;
    out.c.resize(n);
    out.w.resize(n);
    out.tau.resize(n);
    out.members = members;
    for (int j = 0; j < n; ++j) {
        out.c[j] = c_star[j];
        int dim = static_cast<int>(members[j].size());
        if (fallback[j] || labels_single_valued(labels, j)) {
            fallback[j] = 1;
            out.w[j] = Eigen::VectorXd::Ones(dim) / std::sqrt(static_cast<double>(dim));
            out.tau[j] = tau[j];
            continue;
        }
        Eigen::MatrixXd window_j = submatrix(averaged.averaged, members[j]);
        LocalStats stats = estimate_conditional_stats(window_j, column(labels, j));
        Eigen::VectorXd me_local(dim);
        for (int i = 0; i < dim - 1; ++i) me_local[i] = me_var_sender[members[j][i]];
        me_local[dim - 1] = 0.0;  // nu_{j->j} = 0
        Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(dim, dim);
        out.w[j] = stage_two(c_star[j], stats, zero, me_local);
        out.tau[j] = tau[j];
    }

    // final thresholds recalibrated empirically on the window: quantile of
    // the deployed statistic over slots labelled 0 at the target alpha
    DeployedDetector det = deploy_fusion_weights(out, topology);
    CoefficientMatrix cm(topology, det.message_coefficients);
    Eigen::MatrixXd lam(t_len, n);
    for (int t = 0; t < t_len; ++t) {
        BpEngine engine(cm);
        Eigen::VectorXd gamma = llr_window.row(t).transpose();
        for (int l = 0; l < config.abp_iterations; ++l) engine.iterate(gamma, nullptr, nullptr);
        lam.row(t) = engine.weighted_decision(gamma, det.decision_weights).lambda.transpose();
    }
    for (int j = 0; j < n; ++j) {
        std::vector<double> under0;
        for (int t = 0; t < t_len; ++t)
            if (!labels[t][j]) under0.push_back(lam(t, j));
        if (under0.size() >= 10) {
            size_t idx = static_cast<size_t>((1.0 - config.alpha) * (under0.size() - 1));
            std::nth_element(under0.begin(), under0.begin() + idx, under0.end());
            out.tau[j] = under0[idx];
        }
    }

    if (diagnostics) diagnostics->fallback_bp = fallback;
    return out;
}

}  // namespace bpdet
