#include "bpdet/errors.hpp"

#include <cmath>
#include <stdexcept>

namespace bpdet {

ErrorConfig ErrorConfig::error_free(const Topology& topology) {
    ErrorConfig cfg;
    cfg.le_snr_db.assign(topology.node_count(), kInfSnrDb);
    cfg.me_snr_db.assign(topology.node_count(), kInfSnrDb);
    return cfg;
}

ErrorConfig ErrorConfig::faulty_nodes(const Topology& topology, const std::vector<int>& nodes,
                                      double le_db, double me_db) {
    ErrorConfig cfg = error_free(topology);
    for (int n : nodes) {
        if (n < 0 || n >= topology.node_count())
            throw std::invalid_argument("faulty_nodes: node out of range");
        cfg.le_snr_db[n] = le_db;
        cfg.me_snr_db[n] = me_db;
    }
    return cfg;
}

ErrorConfig ErrorConfig::uniform(const Topology& topology, double le_db, double me_db) {
    ErrorConfig cfg;
    cfg.le_snr_db.assign(topology.node_count(), le_db);
    cfg.me_snr_db.assign(topology.node_count(), me_db);
    return cfg;
}

CalibratedErrorSampler calibrate(const std::vector<double>& reference_powers,
                                 const ErrorConfig& config, const Topology& topology) {
    if (static_cast<int>(reference_powers.size()) != topology.node_count())
        throw std::invalid_argument("calibrate: reference power count mismatch");
    CalibratedErrorSampler s;
    s.topology_ = &topology;
    s.ref_power_ = reference_powers;
    s.le_var_.resize(topology.node_count());
    for (int n = 0; n < topology.node_count(); ++n) {
        double rho = config.le_snr_db.at(n);
        if (std::isinf(rho)) {
            s.le_var_[n] = 0.0;
        } else {
            if (reference_powers[n] <= 0)
                throw std::invalid_argument("calibrate: nonpositive reference power with finite LE SNR");
            s.le_var_[n] = reference_powers[n] / std::pow(10.0, rho / 10.0);
        }
    }
    s.me_var_.resize(topology.directed_count());
    for (int e = 0; e < topology.directed_count(); ++e) {
        int sender = topology.dir_src(e);
        double rho = config.me_snr_db.at(sender);
        if (!config.me_snr_db_edge.empty() && !std::isnan(config.me_snr_db_edge[e]))
            rho = config.me_snr_db_edge[e];
        if (std::isinf(rho)) {
            s.me_var_[e] = 0.0;
        } else {
            if (reference_powers[sender] <= 0)
                throw std::invalid_argument("calibrate: nonpositive reference power with finite ME SNR");
            s.me_var_[e] = reference_powers[sender] / std::pow(10.0, rho / 10.0);
        }
    }
    return s;
}

Eigen::VectorXd CalibratedErrorSampler::sample_le_vector(RngStream& rng) const {
    Eigen::VectorXd e(node_count());
    for (int n = 0; n < node_count(); ++n) e[n] = sample_le(n, rng);
    return e;
}

bool CalibratedErrorSampler::any_le() const {
    for (double v : le_var_)
        if (v > 0) return true;
    return false;
}

bool CalibratedErrorSampler::any_me() const {
    for (double v : me_var_)
        if (v > 0) return true;
    return false;
}

Eigen::MatrixXd CalibratedErrorSampler::le_covariance() const {
    Eigen::VectorXd d(node_count());
    for (int n = 0; n < node_count(); ++n) d[n] = le_var_[n];
    return d.asDiagonal();
}

double CalibratedErrorSampler::me_trace_into(const Topology& topology, int node) const {
    double tr = 0.0;
    for (int e : topology.in_edges(node)) tr += me_var_[e];
    return tr;
}

double average_link_copies(const std::vector<double>& copies) {
    if (copies.empty()) throw std::invalid_argument("average_link_copies: empty list");
    double sum = 0.0;
    for (double c : copies) sum += c;
    return sum / copies.size();
}

}  // namespace bpdet
