#include "bpdet/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace bpdet {

double predict_mse_bp(const Eigen::VectorXd& a_row, const Eigen::MatrixXd& sigma_le,
                      double me_trace) {
    if (a_row.size() != sigma_le.rows() || sigma_le.rows() != sigma_le.cols())
        throw std::invalid_argument("predict_mse_bp: dimension mismatch");
    return a_row.dot(sigma_le * a_row) + me_trace;
}

double predict_mse_abp(const Eigen::VectorXd& a_row, const Eigen::MatrixXd& sigma_le,
                       double me_trace, int window) {
    return a_row.dot(sigma_le * a_row) + me_trace / (window + 1);
}

IhlerBoundParams ihler_params_from(const Topology& topology, const CouplingSet& couplings,
                                   const CalibratedErrorSampler& sampler) {
    IhlerBoundParams p;
    p.log_dyn_range.resize(topology.edge_count());
    // d(psi)^2 for psi = e^{J x x'}, x in {0,1}: sup ratio of the four
    // potential values is e^{|J|}
    for (int e = 0; e < topology.edge_count(); ++e)
        p.log_dyn_range[e] = std::abs(couplings.j(e));
    p.ln_u_sq.resize(topology.directed_count());
    for (int e = 0; e < topology.directed_count(); ++e) p.ln_u_sq[e] = sampler.me_variance(e);
    return p;
}

std::vector<Eigen::VectorXd> ihler_bound(const Topology& topology,
                                         const IhlerBoundParams& params, int iters) {
    if (iters < 1) throw std::invalid_argument("ihler_bound: iters >= 1");
    int ne = topology.directed_count();
    // sigma^2 per directed edge; sigma_kj lives on edge (k -> j)
    std::vector<double> sigma_sq(ne), next(ne);
    std::vector<double> ln_d(ne);
    for (int e = 0; e < ne; ++e) {
        auto [a, b] = std::pair{topology.dir_src(e), topology.dir_dst(e)};
        // undirected edge index for (a,b)
        int lo = std::min(a, b), hi = std::max(a, b);
        const auto& edges = topology.edges();
        int idx = static_cast<int>(std::lower_bound(edges.begin(), edges.end(), std::pair{lo, hi}) -
                                   edges.begin());
        ln_d[e] = params.log_dyn_range[idx];
        sigma_sq[e] = ln_d[e] * ln_d[e];
    }

    std::vector<Eigen::VectorXd> bounds;
    bounds.reserve(iters);
    auto emit = [&]() {
        // worst-case (Cauchy-Schwarz) combination across in-edges: on loopy
        // graphs the in-edge errors share history, so the independent-sum
        // form can be exceeded empirically
        Eigen::VectorXd b = Eigen::VectorXd::Zero(topology.node_count());
        for (int j = 0; j < topology.node_count(); ++j) {
            double s = 0.0;
            for (int e : topology.in_edges(j)) s += std::sqrt(sigma_sq[e]);
            b[j] = s * s;
        }
        bounds.push_back(b);
    };
    // the initial sigma covers the pre-update message distance; the bound
    // reported for iteration l is sigma^(l+1), which carries the error
    // injected by the l-th update
    for (int l = 1; l <= iters; ++l) {
        for (int e = 0; e < ne; ++e) {
            // additive (product-of-dynamic-ranges) composition of upstream
            // errors; the root-sum-of-squares variant assumes uncorrelated
            // errors, which cycles break, and then dominance can fail
            double omega_ln = 0.0;
            for (int f : topology.upstream(e)) omega_ln += std::sqrt(sigma_sq[f]);
            double omega = std::exp(omega_ln);
            double d_sq = std::exp(ln_d[e]);
            double contraction = std::log((d_sq * omega + 1.0) / (d_sq + omega));
            // log-domain errors compose additively in the worst case, so the
            // fresh per-link error strength adds to the contracted upstream
            // term before squaring; a root-sum-of-squares variant is tight to
            // first order and loses dominance at degree-1 receivers
            double s = contraction + std::sqrt(params.ln_u_sq[e]);
            next[e] = s * s;
        }
        sigma_sq.swap(next);
        emit();
    }
    return bounds;
}

double to_db_capped(double ratio, bool* capped) {
    if (capped) *capped = false;
    if (!(ratio > 0.0) || !std::isfinite(ratio)) {
        if (capped) *capped = true;
        return kDbCap;
    }
    double db = 10.0 * std::log10(ratio);
    if (db > kDbCap) {
        if (capped) *capped = true;
        return kDbCap;
    }
    return db;
}

DsnrReport empirical_dsnr(const Eigen::MatrixXd& clean, const Eigen::MatrixXd& dirty) {
    if (clean.rows() != dirty.rows() || clean.cols() != dirty.cols())
        throw std::invalid_argument("empirical_dsnr: paired sample shape mismatch");
    DsnrReport rep;
    int n = static_cast<int>(clean.cols());
    rep.samples = static_cast<int>(clean.rows());
    rep.clean_power = clean.array().square().colwise().mean();
    rep.error_power = (dirty - clean).array().square().colwise().mean();
    rep.per_node_db.resize(n);
    for (int j = 0; j < n; ++j) {
        bool capped = false;
        rep.per_node_db[j] = to_db_capped(rep.clean_power[j] / rep.error_power[j], &capped);
        rep.capped = rep.capped || capped;
    }
    bool capped = false;
    rep.network_avg_db = to_db_capped(rep.clean_power.sum() / rep.error_power.sum(), &capped);
    rep.capped = rep.capped || capped;
    return rep;
}

std::vector<MixtureComponent> mixture_from_prior(const StatePrior& prior,
                                                 const NodeConditionalMoments& moments) {
    int n = prior.node_count;
    std::vector<MixtureComponent> out;
    for (size_t mask = 0; mask < prior.pmf.size(); ++mask) {
        if (prior.pmf[mask] <= 0.0) continue;
        MixtureComponent c;
        c.weight = prior.pmf[mask];
        c.mean.resize(n);
        c.var.resize(n);
        c.x.resize(n);
        for (int i = 0; i < n; ++i) {
            bool on = (mask >> i) & 1;
            c.x[i] = on ? 1 : 0;
            c.mean[i] = on ? moments.mean1[i] : moments.mean0[i];
            c.var[i] = on ? moments.var1[i] : moments.var0[i];
        }
        out.push_back(std::move(c));
    }
    return out;
}

std::vector<MixtureComponent> scenario_mixture_components(const ScenarioConfig& config,
                                                          const SignatureSet& signatures) {
    config.validate();
    int n = config.node_count;
    int t = static_cast<int>(config.transmitters.size());
    std::vector<MixtureComponent> out;
    for (int mask = 0; mask < (1 << t); ++mask) {
        PrimaryState state;
        state.tx_state.resize(t);
        for (int i = 0; i < t; ++i) state.tx_state[i] = (mask >> i) & 1;
        derive_node_states(config, state);

        double weight;
        if (t == 1) {
            weight = state.tx_state[0] ? config.p_on : 1.0 - config.p_on;
        } else {
            TxJointPmf pmf = solve_tx_pmf(config.p_on, config.rho_tx);
            weight = state.tx_state[0] ? (state.tx_state[1] ? pmf.p11 : pmf.p10)
                                       : (state.tx_state[1] ? pmf.p01 : pmf.p00);
        }
        if (weight <= 0.0) continue;

        MixtureComponent c;
        c.weight = weight;
        c.x = state.x;
        c.mean.resize(n);
        c.var.resize(n);
        double k = config.samples_per_slot;
        double nv = config.noise_var;
        for (int i = 0; i < n; ++i) {
            Eigen::VectorXd active = signatures.active_signal(i, state.tx_state);
            double sig_energy = active.size() ? active.squaredNorm() : 0.0;
            if (config.statistic == LocalStatistic::energy) {
                // ||a + n||^2 is noncentral chi-square: mean ||a||^2 + K*nv,
                // variance 4*nv*||a||^2 + 2*K*nv^2; statistic divides by K
                c.mean[i] = (sig_energy + k * nv) / k;
                c.var[i] = (4.0 * nv * sig_energy + 2.0 * k * nv * nv) / (k * k);
            } else {
                Eigen::VectorXd s = signatures.full_signature(i);
                double dot = active.size() ? s.dot(active) : 0.0;
                c.mean[i] = dot - 0.5 * s.squaredNorm();
                c.var[i] = nv * s.squaredNorm();
            }
        }
        out.push_back(std::move(c));
    }
    return out;
}

StatePrior mrf_state_prior(const Topology& topology, const CouplingSet& couplings) {
    int n = topology.node_count();
    if (n > 15) throw std::invalid_argument("mrf_state_prior: enumeration limited to N <= 15");
    StatePrior prior;
    prior.node_count = n;
    prior.pmf.resize(std::size_t{1} << n);
    double total = 0.0;
    for (size_t mask = 0; mask < prior.pmf.size(); ++mask) {
        double energy = 0.0;
        for (int i = 0; i < n; ++i)
            if ((mask >> i) & 1) energy += couplings.theta(i);
        for (int e = 0; e < topology.edge_count(); ++e) {
            auto [a, b] = topology.edges()[e];
            if (((mask >> a) & 1) && ((mask >> b) & 1)) energy += couplings.j(e);
        }
        prior.pmf[mask] = std::exp(energy);
        total += prior.pmf[mask];
    }
    for (auto& p : prior.pmf) p /= total;
    return prior;
}

double q_function(double z) { return 0.5 * std::erfc(z / std::numbers::sqrt2); }

double q_inverse(double p) {
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("q_inverse: p in (0,1)");
    // bisection on the monotone Q; ample range and iterations for 1e-14
    double lo = -40.0, hi = 40.0;
    for (int i = 0; i < 200; ++i) {
        double mid = 0.5 * (lo + hi);
        if (q_function(mid) > p) lo = mid;
        else hi = mid;
    }
    return 0.5 * (lo + hi);
}

RatePair gaussian_form_rates(double tau, const Eigen::VectorXd& c, const Eigen::VectorXd& w,
                             const LocalStats& stats, const Eigen::MatrixXd& sigma_le_local,
                             const Eigen::VectorXd& me_var_local) {
    Eigen::VectorXd v = w.cwiseProduct(c);
    auto rate = [&](const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov) {
        double m = v.dot(mean);
        double var = v.dot((cov + sigma_le_local) * v) + w.cwiseProduct(w).dot(me_var_local);
        if (var <= 0) throw std::invalid_argument("gaussian_form_rates: nonpositive variance");
        return q_function((tau - m) / std::sqrt(var));
    };
    return {rate(stats.mean0, stats.cov0), rate(stats.mean1, stats.cov1)};
}

RatePair mixture_form_rates(double tau, int node, const Eigen::VectorXd& a_row,
                            const std::vector<MixtureComponent>& components,
                            const Eigen::VectorXd& le_var, double me_trace) {
    double num0 = 0.0, den0 = 0.0, num1 = 0.0, den1 = 0.0;
    for (const auto& comp : components) {
        double mean = 0.0, var = me_trace;
        for (int i = 0; i < a_row.size(); ++i) {
            mean += a_row[i] * comp.mean[i];
            var += a_row[i] * a_row[i] * (comp.var[i] + le_var[i]);
        }
        double exceed = q_function((tau - mean) / std::sqrt(var));
        if (comp.x[node]) {
            num1 += comp.weight * exceed;
            den1 += comp.weight;
        } else {
            num0 += comp.weight * exceed;
            den0 += comp.weight;
        }
    }
    RatePair r;
    r.p_f = den0 > 0 ? num0 / den0 : 0.0;
    r.p_d = den1 > 0 ? num1 / den1 : 0.0;
    return r;
}

}  // namespace bpdet
