#include <cmath>
#include <numeric>

#include "bpdet/config.hpp"
#include "bpdet/scenario.hpp"
#include "doctest.h"

using namespace bpdet;

TEST_CASE("transmitter pair pmf matches requested marginal and correlation") {
    for (double p : {0.3, 0.5, 0.7}) {
        for (double rho : {0.0, 0.3, 0.6}) {
            TxJointPmf pmf = solve_tx_pmf(p, rho);
            CHECK(pmf.p11 + pmf.p10 + pmf.p01 + pmf.p00 == doctest::Approx(1.0).epsilon(1e-12));
            CHECK(pmf.p11 + pmf.p10 == doctest::Approx(p).epsilon(1e-10));
            CHECK(pmf.p11 + pmf.p01 == doctest::Approx(p).epsilon(1e-10));
            double corr = (pmf.p11 - p * p) / (p * (1.0 - p));
            CHECK(corr == doctest::Approx(rho).epsilon(1e-9));
        }
    }
}

TEST_CASE("node-state prior is a pmf consistent with the coverage map") {
    ScenarioConfig sc = figure1_preset().scenario;
    StatePrior prior = scenario_state_prior(sc);
    CHECK(prior.node_count == 5);
    CHECK(prior.pmf.size() == 32);
    double total = std::accumulate(prior.pmf.begin(), prior.pmf.end(), 0.0);
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    // nodes covered by a single transmitter move together: states where node 0
    // and node 1 disagree are impossible under the two-transmitter coverage
    for (size_t mask = 0; mask < prior.pmf.size(); ++mask) {
        bool n0 = mask & 1, n1 = mask & 2;
        if (n0 != n1) CHECK(prior.pmf[mask] == 0.0);
    }
}

TEST_CASE("sampled primary states match the configured activity statistics") {
    ScenarioConfig sc = figure1_preset().scenario;
    RngStream rng(17);
    const int n = 50000;
    double on0 = 0, on1 = 0, both = 0;
    for (int t = 0; t < n; ++t) {
        PrimaryState st = sample_primary_state(sc, rng);
        REQUIRE(st.tx_state.size() == 2);
        on0 += st.tx_state[0];
        on1 += st.tx_state[1];
        both += st.tx_state[0] && st.tx_state[1];
        // x_j = 1 iff some covering transmitter is on
        CHECK(st.x[0] == st.tx_state[0]);
        CHECK(st.x[4] == st.tx_state[1]);
        CHECK(st.x[2] == (st.tx_state[0] || st.tx_state[1] ? 1 : 0));
    }
    on0 /= n;
    on1 /= n;
    both /= n;
    CHECK(std::abs(on0 - sc.p_on) < 0.01);
    CHECK(std::abs(on1 - sc.p_on) < 0.01);
    double corr = (both - on0 * on1) / std::sqrt(on0 * (1 - on0) * on1 * (1 - on1));
    CHECK(std::abs(corr - sc.rho_tx) < 0.02);
}

TEST_CASE("local statistics separate active from inactive states") {
    ScenarioConfig sc = figure1_preset().scenario;
    SignatureSet sig(sc);
    RngStream rng(23);
    const int n = 4000;
    Eigen::VectorXd sum1 = Eigen::VectorXd::Zero(5), sum0 = Eigen::VectorXd::Zero(5);
    Eigen::VectorXd cnt1 = Eigen::VectorXd::Zero(5), cnt0 = Eigen::VectorXd::Zero(5);
    for (int t = 0; t < n; ++t) {
        PrimaryState st = sample_primary_state(sc, rng);
        auto obs = generate_observations(st, sc, sig, rng);
        Eigen::VectorXd gamma = local_statistics(obs, sc, sig);
        for (int j = 0; j < 5; ++j) {
            if (st.x[j]) {
                sum1[j] += gamma[j];
                cnt1[j] += 1;
            } else {
                sum0[j] += gamma[j];
                cnt0[j] += 1;
            }
        }
    }
    for (int j = 0; j < 5; ++j) {
        REQUIRE(cnt1[j] > 100);
        REQUIRE(cnt0[j] > 100);
        CHECK(sum1[j] / cnt1[j] > sum0[j] / cnt0[j]);
    }
}

TEST_CASE("signature coverage mirrors the transmitter specs") {
    ScenarioConfig sc = figure1_preset().scenario;
    SignatureSet sig(sc);
    CHECK(sig.tx_count() == 2);
    CHECK(sig.covers(0, 0));
    CHECK(!sig.covers(0, 1));
    CHECK(sig.covers(2, 0));
    CHECK(sig.covers(2, 1));
    CHECK(sig.covers(4, 1));
    CHECK(!sig.covers(4, 0));
    CHECK(sig.signature(0, 0).size() == sc.samples_per_slot);
}

TEST_CASE("conditional statistics use sample moments with divisor n-1") {
    Eigen::MatrixXd window(6, 2);
    window << 1, 2, 3, 4, 5, 6, 0, 0, 2, 2, 4, 4;
    std::vector<std::uint8_t> labels = {1, 1, 1, 0, 0, 0};
    LocalStats st = estimate_conditional_stats(window, labels);
    CHECK(st.count1 == 3);
    CHECK(st.count0 == 3);
    CHECK(st.mean1[0] == doctest::Approx(3.0));
    CHECK(st.mean0[0] == doctest::Approx(2.0));
    CHECK(st.delta[0] == doctest::Approx(1.0));
    CHECK(st.delta[1] == doctest::Approx(2.0));
    // var of {1,3,5} with divisor 2 is 4
    CHECK(st.cov1(0, 0) == doctest::Approx(4.0));
    CHECK(st.cov0(0, 0) == doctest::Approx(4.0));
    CHECK(st.cov1(0, 1) == doctest::Approx(4.0));  // perfectly correlated columns
}
