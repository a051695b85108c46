#include "bpdet/engine.hpp"

#include <cmath>
#include <stdexcept>

namespace bpdet {

namespace {
double logaddexp(double a, double b) {
    if (a == b) return a + 0.6931471805599453;
    double hi = std::max(a, b), lo = std::min(a, b);
    return hi + std::log1p(std::exp(lo - hi));
}
}  // namespace

double s_transform(double a, double b) { return logaddexp(0.0, a + b) - logaddexp(a, b); }

BpEngine::BpEngine(const Topology& topology, const CouplingSet& couplings, BpMode mode)
    : topology_(&topology), mode_(mode) {
    int ne = topology.directed_count();
    coupling_per_edge_.resize(ne);
    coeff_per_edge_.resize(ne);
    for (int e = 0; e < ne; ++e) {
        double j = couplings.j(topology, topology.dir_src(e), topology.dir_dst(e));
        coupling_per_edge_[e] = j;
        coeff_per_edge_[e] = coefficient_from_coupling(j);
    }
    reset();
}

BpEngine::BpEngine(const CoefficientMatrix& coefficients)
    : topology_(&coefficients.topology()), mode_(BpMode::linear) {
    int ne = topology_->directed_count();
    coupling_per_edge_.assign(ne, 0.0);
    coeff_per_edge_.resize(ne);
    for (int e = 0; e < ne; ++e)
        coeff_per_edge_[e] = coefficients.coeff(topology_->dir_dst(e), topology_->dir_src(e));
    reset();
}

void BpEngine::reset() {
    int ne = topology_->directed_count();
    m_.assign(ne, 0.0);
    m_prev_.assign(ne, 0.0);
    running_sum_.assign(ne, 0.0);
    history_.clear();
    iteration_ = 0;
    max_delta_ = 0.0;
}

void BpEngine::iterate(const Eigen::VectorXd& llrs, const CalibratedErrorSampler* sampler,
                       RngStream* rng) {
    if (llrs.size() != topology_->node_count())
        throw std::invalid_argument("bp engine: llr length mismatch");
    m_prev_.swap(m_);
    int ne = topology_->directed_count();
    max_delta_ = 0.0;
    for (int e = 0; e < ne; ++e) {
        int src = topology_->dir_src(e);
        double in = llrs[src];
        for (int f : topology_->upstream(e)) in += m_prev_[f];
        double value = (mode_ == BpMode::exact) ? s_transform(coupling_per_edge_[e], in)
                                                : coeff_per_edge_[e] * in;
        if (sampler && rng) value += sampler->sample_me(e, *rng);
        m_[e] = value;
        max_delta_ = std::max(max_delta_, std::abs(m_[e] - m_prev_[e]));
    }
    for (int e = 0; e < ne; ++e) running_sum_[e] += m_[e];
    history_.push_back(m_);
    ++iteration_;
}

DecisionVariables BpEngine::decision_variables(const Eigen::VectorXd& llrs) const {
    DecisionVariables dv;
    dv.variant = DecisionVariant::plain;
    dv.iteration = iteration_;
    dv.lambda = llrs;
    for (int j = 0; j < topology_->node_count(); ++j)
        for (int e : topology_->in_edges(j)) dv.lambda[j] += m_[e];
    return dv;
}

DecisionVariables BpEngine::weighted_decision(
    const Eigen::VectorXd& llrs, const std::vector<std::vector<double>>& weights) const {
    if (static_cast<int>(weights.size()) != topology_->node_count())
        throw std::invalid_argument("weighted_decision: weight shape mismatch");
    DecisionVariables dv;
    dv.variant = DecisionVariant::weighted;
    dv.iteration = iteration_;
    dv.lambda = llrs;
    for (int j = 0; j < topology_->node_count(); ++j) {
        const auto& in = topology_->in_edges(j);
        if (weights[j].size() != in.size())
            throw std::invalid_argument("weighted_decision: weight shape mismatch");
        for (size_t i = 0; i < in.size(); ++i) dv.lambda[j] += weights[j][i] * m_[in[i]];
    }
    return dv;
}

DecisionVariables BpEngine::abp_decision(const Eigen::VectorXd& llrs, int window) const {
    if (iteration_ == 0) throw std::logic_error("abp_decision: no iterations run");
    DecisionVariables dv;
    dv.variant = DecisionVariant::averaged;
    dv.iteration = iteration_;
    dv.lambda = llrs;
    int span = std::min(window + 1, iteration_);  // warm-up: average what exists
    if (span >= iteration_) {
        // full running sum, the constant-memory path of ABP
        for (int j = 0; j < topology_->node_count(); ++j)
            for (int e : topology_->in_edges(j)) dv.lambda[j] += running_sum_[e] / iteration_;
    } else {
        for (int j = 0; j < topology_->node_count(); ++j) {
            for (int e : topology_->in_edges(j)) {
                double sum = 0.0;
                for (int l = iteration_ - span; l < iteration_; ++l) sum += history_[l][e];
                dv.lambda[j] += sum / span;
            }
        }
    }
    return dv;
}

DecisionVariables BpEngine::weighted_abp_decision(
    const Eigen::VectorXd& llrs, const std::vector<std::vector<double>>& weights,
    int window) const {
    if (iteration_ == 0) throw std::logic_error("weighted_abp_decision: no iterations run");
    if (static_cast<int>(weights.size()) != topology_->node_count())
        throw std::invalid_argument("weighted_abp_decision: weight shape mismatch");
    DecisionVariables dv;
    dv.variant = DecisionVariant::averaged;
    dv.iteration = iteration_;
    dv.lambda = llrs;
    int span = std::min(window + 1, iteration_);
    for (int j = 0; j < topology_->node_count(); ++j) {
        const auto& in = topology_->in_edges(j);
        if (weights[j].size() != in.size())
            throw std::invalid_argument("weighted_abp_decision: weight shape mismatch");
        for (size_t i = 0; i < in.size(); ++i) {
            int e = in[i];
            double avg;
            if (span >= iteration_) {
                avg = running_sum_[e] / iteration_;
            } else {
                double sum = 0.0;
                for (int l = iteration_ - span; l < iteration_; ++l) sum += history_[l][e];
                avg = sum / span;
            }
            dv.lambda[j] += weights[j][i] * avg;
        }
    }
    return dv;
}

DecisionVariables run_plain_bp(const Topology& topology, const CouplingSet& couplings,
                               BpMode mode, const Eigen::VectorXd& llrs, int iters) {
    BpEngine engine(topology, couplings, mode);
    for (int l = 0; l < iters; ++l) engine.iterate(llrs, nullptr, nullptr);
    return engine.decision_variables(llrs);
}

Eigen::VectorXd linear_fixed_point(const CoefficientMatrix& coefficients,
                                   const Eigen::VectorXd& llrs, double tol, int max_iters) {
    BpEngine engine(coefficients);
    for (int l = 0; l < max_iters; ++l) {
        engine.iterate(llrs, nullptr, nullptr);
        if (l > 0 && engine.max_message_delta() < tol) break;
    }
    return engine.decision_variables(llrs).lambda;
}

}  // namespace bpdet
