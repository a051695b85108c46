#include <cmath>
#include <numeric>

#include "bpdet/analysis.hpp"
#include "bpdet/config.hpp"
#include "bpdet/engine.hpp"
#include "bpdet/rng.hpp"
#include "doctest.h"

using namespace bpdet;

namespace {
Topology ring5() { return Topology(5, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 0}, {1, 3}}); }
}  // namespace

TEST_CASE("fixed-point MSE prediction is the quadratic form plus the ME trace") {
    Eigen::VectorXd a(3);
    a << 1.0, 0.5, -0.25;
    Eigen::MatrixXd sigma = Eigen::MatrixXd::Zero(3, 3);
    sigma.diagonal() << 0.1, 0.2, 0.4;
    double expected = 1.0 * 0.1 + 0.25 * 0.2 + 0.0625 * 0.4;
    CHECK(predict_mse_bp(a, sigma, 0.7) == doctest::Approx(expected + 0.7).epsilon(1e-12));
    // averaging variant: ME part shrunk by (window + 1)
    CHECK(predict_mse_abp(a, sigma, 0.7, 9) ==
          doctest::Approx(expected + 0.07).epsilon(1e-12));
    CHECK(predict_mse_abp(a, sigma, 0.7, 0) ==
          doctest::Approx(predict_mse_bp(a, sigma, 0.7)).epsilon(1e-12));
}

TEST_CASE("MSE prediction matches Monte Carlo for the fixed-point linear statistic") {
    // independent oracle for the closed form: direct simulation of
    // lambda~ = a.(gamma + eps) + sum of incoming MEs
    Topology top = ring5();
    CouplingSet couplings(top, 0.4);
    CoefficientMatrix cm(top, couplings);
    Eigen::MatrixXd a = combining_matrix(cm);
    std::vector<double> power(5, 1.0);
    CalibratedErrorSampler sampler = calibrate(power, ErrorConfig::uniform(top, 10.0, 10.0), top);
    Eigen::MatrixXd le_cov = sampler.le_covariance();
    RngStream rng(31);
    const int trials = 200000;
    int node = 1;
    Eigen::VectorXd aj = a.col(node);
    double me_trace = sampler.me_trace_into(top, node);
    double mse = 0.0;
    for (int t = 0; t < trials; ++t) {
        Eigen::VectorXd eps(5);
        for (int i = 0; i < 5; ++i) eps[i] = sampler.sample_le(i, rng);
        double err = aj.dot(eps) + std::sqrt(me_trace) * rng.normal();
        mse += err * err;
    }
    mse /= trials;
    CHECK(mse == doctest::Approx(predict_mse_bp(aj, le_cov, me_trace)).epsilon(0.02));
}

TEST_CASE("dB conversion caps infinite and huge ratios") {
    bool capped = false;
    CHECK(to_db_capped(100.0, &capped) == doctest::Approx(20.0));
    CHECK(!capped);
    CHECK(to_db_capped(std::numeric_limits<double>::infinity(), &capped) == kDbCap);
    CHECK(capped);
    CHECK(to_db_capped(1e30) == kDbCap);
}

TEST_CASE("empirical DSNR on hand-built samples") {
    Eigen::MatrixXd clean(4, 2), dirty(4, 2);
    clean << 2, 1, -2, 1, 2, -1, -2, -1;  // power 4 and 1
    dirty = clean;
    dirty.col(0).array() += 1.0;  // error power 1 on node 0 only
    DsnrReport rep = empirical_dsnr(clean, dirty);
    CHECK(rep.per_node_db[0] == doctest::Approx(10.0 * std::log10(4.0)).epsilon(1e-12));
    CHECK(rep.per_node_db[1] == kDbCap);  // zero error on node 1
    CHECK(rep.network_avg_db == doctest::Approx(10.0 * std::log10(5.0 / 1.0)).epsilon(1e-12));
    CHECK(rep.samples == 4);
}

TEST_CASE("Q function and its inverse round-trip tightly") {
    CHECK(q_function(0.0) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(q_function(1.6448536269514722) == doctest::Approx(0.05).epsilon(1e-10));
    for (double p : {1e-6, 0.01, 0.1, 0.5, 0.9, 0.999}) {
        CHECK(q_function(q_inverse(p)) == doctest::Approx(p).epsilon(1e-10));
    }
    for (double z : {-3.0, -0.5, 0.0, 0.7, 4.0}) {
        CHECK(q_inverse(q_function(z)) == doctest::Approx(z).scale(1.0).epsilon(1e-9));
    }
}

TEST_CASE("message-error bound is positive, cumulative, and settles") {
    Topology top = ring5();
    CouplingSet couplings(top, 0.4);
    std::vector<double> power(5, 1.0);
    CalibratedErrorSampler sampler = calibrate(power, ErrorConfig::uniform(top, kInfSnrDb, 10.0), top);
    IhlerBoundParams params = ihler_params_from(top, couplings, sampler);
    CHECK(params.log_dyn_range.size() == static_cast<size_t>(top.edge_count()));
    CHECK(params.ln_u_sq.size() == static_cast<size_t>(top.directed_count()));
    for (double v : params.log_dyn_range) CHECK(v == doctest::Approx(0.4));
    auto bound = ihler_bound(top, params, 60);
    REQUIRE(bound.size() == 60);
    for (const auto& row : bound)
        for (int j = 0; j < 5; ++j) CHECK(row[j] > 0.0);
    // the per-iteration contributions contract, so the bound settles
    double last_step = (bound[59] - bound[58]).lpNorm<Eigen::Infinity>();
    double first_step = (bound[1] - bound[0]).lpNorm<Eigen::Infinity>();
    CHECK(last_step < 0.05 * std::max(first_step, 1e-30));
    CHECK(last_step < 1e-2 * bound[59].lpNorm<Eigen::Infinity>());
}

TEST_CASE("mixture from a prior keeps weights and state labels") {
    Topology top(2, {{0, 1}});
    CouplingSet couplings(top, 0.4);
    StatePrior prior = mrf_state_prior(top, couplings);
    double total = std::accumulate(prior.pmf.begin(), prior.pmf.end(), 0.0);
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    NodeConditionalMoments moments;
    moments.mean0 = Eigen::VectorXd::Zero(2);
    moments.mean1 = Eigen::VectorXd::Ones(2);
    moments.var0 = Eigen::VectorXd::Ones(2);
    moments.var1 = Eigen::VectorXd::Constant(2, 2.0);
    auto comps = mixture_from_prior(prior, moments);
    REQUIRE(comps.size() == 4);
    double wsum = 0.0;
    for (const auto& c : comps) {
        wsum += c.weight;
        for (int j = 0; j < 2; ++j) {
            CHECK(c.mean[j] == doctest::Approx(c.x[j] ? 1.0 : 0.0));
            CHECK(c.var[j] == doctest::Approx(c.x[j] ? 2.0 : 1.0));
        }
    }
    CHECK(wsum == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("Gaussian-form rates agree with direct normal tail computation") {
    // single-node neighborhood: c = w = 1, stats reduce to scalar moments
    LocalStats st;
    st.mean0 = Eigen::VectorXd::Constant(1, 0.0);
    st.mean1 = Eigen::VectorXd::Constant(1, 2.0);
    st.delta = st.mean1 - st.mean0;
    st.cov0 = Eigen::MatrixXd::Constant(1, 1, 1.0);
    st.cov1 = Eigen::MatrixXd::Constant(1, 1, 1.5);
    Eigen::VectorXd one = Eigen::VectorXd::Ones(1);
    Eigen::MatrixXd le = Eigen::MatrixXd::Constant(1, 1, 0.5);
    Eigen::VectorXd me = Eigen::VectorXd::Constant(1, 0.25);
    double tau = 1.2;
    RatePair r = gaussian_form_rates(tau, one, one, st, le, me);
    CHECK(r.p_f == doctest::Approx(q_function((tau - 0.0) / std::sqrt(1.0 + 0.5 + 0.25)))
                       .epsilon(1e-12));
    CHECK(r.p_d == doctest::Approx(q_function((tau - 2.0) / std::sqrt(1.5 + 0.5 + 0.25)))
                       .epsilon(1e-12));
}

TEST_CASE("mixture-form rates match Monte Carlo on a two-component mixture") {
    // hand-built mixture; oracle by direct sampling
    std::vector<MixtureComponent> comps(2);
    comps[0].weight = 0.6;
    comps[0].mean = Eigen::VectorXd::Constant(1, 0.0);
    comps[0].var = Eigen::VectorXd::Constant(1, 1.0);
    comps[0].x = {0};
    comps[1].weight = 0.4;
    comps[1].mean = Eigen::VectorXd::Constant(1, 1.5);
    comps[1].var = Eigen::VectorXd::Constant(1, 2.0);
    comps[1].x = {1};
    Eigen::VectorXd a = Eigen::VectorXd::Ones(1);
    Eigen::VectorXd le_var = Eigen::VectorXd::Constant(1, 0.3);
    double me_trace = 0.2, tau = 1.0;
    RatePair r = mixture_form_rates(tau, 0, a, comps, le_var, me_trace);
    RngStream rng(99);
    const int trials = 400000;
    double f_hit = 0, f_tot = 0, d_hit = 0, d_tot = 0;
    for (int t = 0; t < trials; ++t) {
        bool on = rng.uniform() < 0.4;
        const auto& c = comps[on ? 1 : 0];
        double lam = c.mean[0] + std::sqrt(c.var[0]) * rng.normal() +
                     std::sqrt(0.3) * rng.normal() + std::sqrt(me_trace) * rng.normal();
        if (on) {
            d_tot += 1;
            d_hit += lam > tau;
        } else {
            f_tot += 1;
            f_hit += lam > tau;
        }
    }
    CHECK(std::abs(r.p_f - f_hit / f_tot) < 0.005);
    CHECK(std::abs(r.p_d - d_hit / d_tot) < 0.005);
}
