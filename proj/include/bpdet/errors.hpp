#pragma once

#include <Eigen/Dense>
#include <limits>
#include <vector>

#include "bpdet/graph.hpp"
#include "bpdet/rng.hpp"

namespace bpdet {

inline constexpr double kInfSnrDb = std::numeric_limits<double>::infinity();

// SNR-relative error strengths; +inf means error-free.
struct ErrorConfig {
    std::vector<double> le_snr_db;            // per node
    std::vector<double> me_snr_db;            // per node (applies to both outgoing edges)
    std::vector<double> me_snr_db_edge;       // optional per-directed-edge override (NaN = use node)

    static ErrorConfig error_free(const Topology& topology);
    // listed nodes get (le_db, me_db), everyone else error-free
    static ErrorConfig faulty_nodes(const Topology& topology, const std::vector<int>& nodes,
                                    double le_db, double me_db);
    static ErrorConfig uniform(const Topology& topology, double le_db, double me_db);
};

// Zero-mean Gaussian LE/ME sampler with variances set from SNR ratios
// relative to the sending node's likelihood power E[|gamma_j|^2].
class CalibratedErrorSampler {
public:
    CalibratedErrorSampler() = default;

    double le_variance(int node) const { return le_var_[node]; }
    double me_variance(int directed_edge) const { return me_var_[directed_edge]; }
    double reference_power(int node) const { return ref_power_[node]; }
    int node_count() const { return static_cast<int>(le_var_.size()); }

    double sample_le(int node, RngStream& rng) const {
        double v = le_var_[node];
        return v > 0 ? std::sqrt(v) * rng.normal() : 0.0;
    }
    double sample_me(int directed_edge, RngStream& rng) const {
        double v = me_var_[directed_edge];
        return v > 0 ? std::sqrt(v) * rng.normal() : 0.0;
    }

    Eigen::VectorXd sample_le_vector(RngStream& rng) const;
    bool any_le() const;
    bool any_me() const;

    // Sigma_epsilon as a diagonal N x N matrix
    Eigen::MatrixXd le_covariance() const;
    // tr(Sigma_nu_j): summed ME variance over edges into node j
    double me_trace_into(const Topology& topology, int node) const;

    friend CalibratedErrorSampler calibrate(const std::vector<double>& reference_powers,
                                            const ErrorConfig& config, const Topology& topology);

private:
    std::vector<double> le_var_;
    std::vector<double> me_var_;      // per directed edge, variance of sender's ME
    std::vector<double> ref_power_;
    const Topology* topology_ = nullptr;
};

CalibratedErrorSampler calibrate(const std::vector<double>& reference_powers,
                                 const ErrorConfig& config, const Topology& topology);

double average_link_copies(const std::vector<double>& copies);

}  // namespace bpdet
