#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "bpdet/rng.hpp"

namespace bpdet {

enum class LocalStatistic { matched_filter, energy };

struct TransmitterSpec {
    // node index -> SNR (dB) of this transmitter's signal at that node
    std::vector<int> covered_nodes;
    std::vector<double> snr_db;
};

struct ScenarioConfig {
    int node_count = 0;
    int samples_per_slot = 100;            // K
    double noise_var = 1.0;
    double p_on = 0.5;                     // per-transmitter activity marginal
    double rho_tx = 0.3;                   // pairwise transmitter correlation
    LocalStatistic statistic = LocalStatistic::energy;
    int window_length = 2000;              // T, adaptation window
    std::vector<TransmitterSpec> transmitters;
    std::uint64_t signature_seed = 7;      // signatures are fixed across slots

    void validate() const;
};

struct PrimaryState {
    std::vector<std::uint8_t> tx_state;    // per transmitter
    std::vector<std::uint8_t> x;           // per node: 1 iff any covering tx on
};

// Fixed per-scenario signal signatures; s[node][tx_slot] is empty when the
// transmitter does not cover the node.
class SignatureSet {
public:
    SignatureSet(const ScenarioConfig& config);

    const Eigen::VectorXd& signature(int node, int tx) const { return s_[node][tx]; }
    bool covers(int node, int tx) const { return s_[node][tx].size() > 0; }
    // sum of signatures of the active transmitters covering the node
    Eigen::VectorXd active_signal(int node, const std::vector<std::uint8_t>& tx_state) const;
    // superposition of all covering transmitters (matched-filter template)
    Eigen::VectorXd full_signature(int node) const;
    int tx_count() const { return static_cast<int>(s_.empty() ? 0 : s_[0].size()); }

private:
    std::vector<std::vector<Eigen::VectorXd>> s_;
};

// 2x2 joint pmf of a correlated transmitter pair solved from (p_on, rho_tx)
struct TxJointPmf {
    double p11, p10, p01, p00;
};
TxJointPmf solve_tx_pmf(double p_on, double rho_tx);

// Exact pmf over node-state vectors induced by the transmitter process and
// the coverage map. Used by the mixture-form rate computation.
struct StatePrior {
    // probability of each node-state vector, indexed by bitmask over nodes
    std::vector<double> pmf;
    int node_count = 0;
};
StatePrior scenario_state_prior(const ScenarioConfig& config);

PrimaryState sample_primary_state(const ScenarioConfig& config, RngStream& rng);
std::vector<PrimaryState> sample_primary_states(const ScenarioConfig& config, int slots,
                                                RngStream& rng);
void derive_node_states(const ScenarioConfig& config, PrimaryState& state);

// y_i = (sum of active covering signatures) + noise
std::vector<Eigen::VectorXd> generate_observations(const PrimaryState& state,
                                                   const ScenarioConfig& config,
                                                   const SignatureSet& signatures,
                                                   RngStream& rng);

double local_llr(const Eigen::VectorXd& y, const Eigen::VectorXd& s);
double energy_statistic(const Eigen::VectorXd& y, int k);

// Per-node local statistic vector for one slot (matched filter or energy per
// the config), with theta offsets applied by the caller when nonzero.
Eigen::VectorXd local_statistics(const std::vector<Eigen::VectorXd>& observations,
                                 const ScenarioConfig& config, const SignatureSet& signatures);

struct LocalStats {
    Eigen::VectorXd mean0, mean1;          // conditional means, |M_j| entries
    Eigen::MatrixXd cov0, cov1;            // conditional covariances
    Eigen::VectorXd delta;                 // mean1 - mean0
    int count0 = 0, count1 = 0;
};

// Sample means and covariances (divisor n-1) of the columns of stat_window,
// conditioned on a binary label per row.
LocalStats estimate_conditional_stats(const Eigen::MatrixXd& stat_window,
                                      const std::vector<std::uint8_t>& labels);

}  // namespace bpdet
