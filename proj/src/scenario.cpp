#include "bpdet/scenario.hpp"

#include <cmath>
#include <stdexcept>

namespace bpdet {

void ScenarioConfig::validate() const {
    if (node_count <= 0) throw std::invalid_argument("scenario: node_count must be positive");
    if (samples_per_slot < 1) throw std::invalid_argument("scenario: samples_per_slot >= 1");
    if (noise_var < 0) throw std::invalid_argument("scenario: noise_var >= 0");
    if (!(p_on > 0 && p_on < 1)) throw std::invalid_argument("scenario: p_on in (0,1)");
    if (transmitters.empty()) throw std::invalid_argument("scenario: at least one transmitter");
    if (transmitters.size() > 2)
        throw std::invalid_argument("scenario: at most two transmitters supported");
    for (const auto& tx : transmitters) {
        if (tx.covered_nodes.size() != tx.snr_db.size())
            throw std::invalid_argument("scenario: transmitter coverage/snr size mismatch");
        for (int n : tx.covered_nodes)
            if (n < 0 || n >= node_count)
                throw std::invalid_argument("scenario: coverage node out of range");
    }
    if (transmitters.size() == 2) solve_tx_pmf(p_on, rho_tx);  // feasibility
}

TxJointPmf solve_tx_pmf(double p_on, double rho_tx) {
    double q = p_on * (1.0 - p_on);
    TxJointPmf pmf;
    pmf.p11 = p_on * p_on + rho_tx * q;
    pmf.p10 = pmf.p01 = q * (1.0 - rho_tx);
    pmf.p00 = (1.0 - p_on) * (1.0 - p_on) + rho_tx * q;
    const double eps = -1e-12;
    if (pmf.p11 < eps || pmf.p10 < eps || pmf.p00 < eps)
        throw std::invalid_argument("scenario: (p_on, rho_tx) infeasible");
    return pmf;
}

SignatureSet::SignatureSet(const ScenarioConfig& config) {
    RngStream rng(RngStream::derive(config.signature_seed, 0, 0));
    int ntx = static_cast<int>(config.transmitters.size());
    s_.assign(config.node_count, std::vector<Eigen::VectorXd>(ntx));
    for (int t = 0; t < ntx; ++t) {
        const auto& tx = config.transmitters[t];
        for (size_t i = 0; i < tx.covered_nodes.size(); ++i) {
            Eigen::VectorXd sig(config.samples_per_slot);
            for (int k = 0; k < config.samples_per_slot; ++k) sig[k] = rng.normal();
            // ||s||^2 / (K sigma_n^2) = 10^(snr/10)
            double target = config.samples_per_slot * config.noise_var *
                            std::pow(10.0, tx.snr_db[i] / 10.0);
            sig *= std::sqrt(target) / sig.norm();
            s_[tx.covered_nodes[i]][t] = sig;
        }
    }
}

Eigen::VectorXd SignatureSet::active_signal(int node,
                                            const std::vector<std::uint8_t>& tx_state) const {
    Eigen::VectorXd out;
    for (size_t t = 0; t < tx_state.size(); ++t) {
        if (!tx_state[t] || !covers(node, static_cast<int>(t))) continue;
        if (out.size() == 0) out = s_[node][t];
        else out += s_[node][t];
    }
    return out;
}

Eigen::VectorXd SignatureSet::full_signature(int node) const {
    Eigen::VectorXd out;
    for (size_t t = 0; t < s_[node].size(); ++t) {
        if (!covers(node, static_cast<int>(t))) continue;
        if (out.size() == 0) out = s_[node][t];
        else out += s_[node][t];
    }
    return out;
}

void derive_node_states(const ScenarioConfig& config, PrimaryState& state) {
    state.x.assign(config.node_count, 0);
    for (size_t t = 0; t < state.tx_state.size(); ++t) {
        if (!state.tx_state[t]) continue;
        for (int n : config.transmitters[t].covered_nodes) state.x[n] = 1;
    }
}

PrimaryState sample_primary_state(const ScenarioConfig& config, RngStream& rng) {
    PrimaryState state;
    int ntx = static_cast<int>(config.transmitters.size());
    state.tx_state.resize(ntx);
    if (ntx == 1) {
        state.tx_state[0] = rng.bernoulli(config.p_on) ? 1 : 0;
    } else {
        TxJointPmf pmf = solve_tx_pmf(config.p_on, config.rho_tx);
        double u = rng.uniform();
        if (u < pmf.p11) state.tx_state = {1, 1};
        else if (u < pmf.p11 + pmf.p10) state.tx_state = {1, 0};
        else if (u < pmf.p11 + pmf.p10 + pmf.p01) state.tx_state = {0, 1};
        else state.tx_state = {0, 0};
    }
    derive_node_states(config, state);
    return state;
}

std::vector<PrimaryState> sample_primary_states(const ScenarioConfig& config, int slots,
                                                RngStream& rng) {
    std::vector<PrimaryState> out;
    out.reserve(slots);
    for (int t = 0; t < slots; ++t) out.push_back(sample_primary_state(config, rng));
    return out;
}

StatePrior scenario_state_prior(const ScenarioConfig& config) {
    StatePrior prior;
    prior.node_count = config.node_count;
    prior.pmf.assign(std::size_t{1} << config.node_count, 0.0);
    int ntx = static_cast<int>(config.transmitters.size());
    std::vector<double> tx_prob;
    if (ntx == 1) {
        tx_prob = {1.0 - config.p_on, config.p_on};
    } else {
        TxJointPmf pmf = solve_tx_pmf(config.p_on, config.rho_tx);
        tx_prob = {pmf.p00, pmf.p10, pmf.p01, pmf.p11};  // bit t of index = tx t state
    }
    for (size_t cfg = 0; cfg < tx_prob.size(); ++cfg) {
        PrimaryState st;
        st.tx_state.resize(ntx);
        for (int t = 0; t < ntx; ++t) st.tx_state[t] = (cfg >> t) & 1;
        derive_node_states(config, st);
        size_t mask = 0;
        for (int n = 0; n < config.node_count; ++n)
            if (st.x[n]) mask |= std::size_t{1} << n;
        prior.pmf[mask] += tx_prob[cfg];
    }
    return prior;
}

std::vector<Eigen::VectorXd> generate_observations(const PrimaryState& state,
                                                   const ScenarioConfig& config,
                                                   const SignatureSet& signatures,
                                                   RngStream& rng) {
    std::vector<Eigen::VectorXd> y(config.node_count);
    double sd = std::sqrt(config.noise_var);
    for (int n = 0; n < config.node_count; ++n) {
        Eigen::VectorXd obs(config.samples_per_slot);
        for (int k = 0; k < config.samples_per_slot; ++k) obs[k] = sd * rng.normal();
        Eigen::VectorXd sig = signatures.active_signal(n, state.tx_state);
        if (sig.size() > 0) obs += sig;
        y[n] = std::move(obs);
    }
    return y;
}

double local_llr(const Eigen::VectorXd& y, const Eigen::VectorXd& s) {
    if (y.size() != s.size()) throw std::invalid_argument("local_llr: length mismatch");
    return s.dot(y) - 0.5 * s.squaredNorm();
}

double energy_statistic(const Eigen::VectorXd& y, int k) {
    if (k < 1 || y.size() != k) throw std::invalid_argument("energy_statistic: bad length");
    return y.squaredNorm() / k;
}

Eigen::VectorXd local_statistics(const std::vector<Eigen::VectorXd>& observations,
                                 const ScenarioConfig& config, const SignatureSet& signatures) {
    Eigen::VectorXd gamma(config.node_count);
    for (int n = 0; n < config.node_count; ++n) {
        if (config.statistic == LocalStatistic::energy) {
            gamma[n] = energy_statistic(observations[n], config.samples_per_slot);
        } else {
            Eigen::VectorXd s = signatures.full_signature(n);
            if (s.size() == 0) s = Eigen::VectorXd::Zero(config.samples_per_slot);
            gamma[n] = local_llr(observations[n], s);
        }
    }
    return gamma;
}

LocalStats estimate_conditional_stats(const Eigen::MatrixXd& stat_window,
                                      const std::vector<std::uint8_t>& labels) {
    const int rows = static_cast<int>(stat_window.rows());
    const int dim = static_cast<int>(stat_window.cols());
    if (static_cast<int>(labels.size()) != rows)
        throw std::invalid_argument("estimate_conditional_stats: label length mismatch");

    LocalStats out;
    for (int b = 0; b < 2; ++b) {
        int count = 0;
        Eigen::VectorXd mean = Eigen::VectorXd::Zero(dim);
        for (int t = 0; t < rows; ++t) {
            if ((labels[t] != 0) != (b == 1)) continue;
            mean += stat_window.row(t).transpose();
            ++count;
        }
        if (count < 2)
            throw std::runtime_error("estimate_conditional_stats: fewer than 2 samples for label " +
                                     std::to_string(b));
        mean /= count;
        Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(dim, dim);
        for (int t = 0; t < rows; ++t) {
            if ((labels[t] != 0) != (b == 1)) continue;
            Eigen::VectorXd d = stat_window.row(t).transpose() - mean;
            cov += d * d.transpose();
        }
        cov /= (count - 1);
        if (b == 0) {
            out.mean0 = mean;
            out.cov0 = cov;
            out.count0 = count;
        } else {
            out.mean1 = mean;
            out.cov1 = cov;
            out.count1 = count;
        }
    }
    out.delta = out.mean1 - out.mean0;
    return out;
}

}  // namespace bpdet
