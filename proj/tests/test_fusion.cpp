#include <cmath>
#include <cstdio>
#include <string>

#include "bpdet/analysis.hpp"
#include "bpdet/fusion.hpp"
#include "bpdet/rng.hpp"
#include "doctest.h"

using namespace bpdet;

namespace {
Topology ring5() { return Topology(5, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 0}, {1, 3}}); }

Eigen::MatrixXd random_spd(int d, RngStream& rng) {
    Eigen::MatrixXd b(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) b(i, j) = rng.normal();
    return b * b.transpose() + 0.1 * Eigen::MatrixXd::Identity(d, d);
}
}  // namespace

TEST_CASE("closed neighborhood ordering: sorted neighbors then self") {
    Topology top = ring5();
    auto m1 = neighborhood_of(top, 1);
    REQUIRE(m1.size() == 4);
    CHECK(m1[0] == 0);
    CHECK(m1[1] == 2);
    CHECK(m1[2] == 3);
    CHECK(m1[3] == 1);  // self last
}

TEST_CASE("deflection maximizer: diagonal case has a closed form") {
    Eigen::VectorXd delta(2);
    delta << 1.0, 1.0;
    Eigen::MatrixXd sigma = Eigen::MatrixXd::Zero(2, 2);
    sigma.diagonal() << 1.0, 4.0;
    Eigen::VectorXd w = maximize_deflection(delta, sigma);
    // w* proportional to (1, 0.25)
    CHECK(w[0] == doctest::Approx(0.97014250014533188).epsilon(1e-10));
    CHECK(w[1] == doctest::Approx(0.24253562503633297).epsilon(1e-10));
    CHECK(w.norm() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(w.dot(delta) >= 0.0);
}

TEST_CASE("deflection maximizer beats random directions") {
    RngStream rng(13);
    for (int inst = 0; inst < 50; ++inst) {
        int d = 2 + static_cast<int>(rng.uniform() * 5);
        Eigen::VectorXd delta(d);
        for (int i = 0; i < d; ++i) delta[i] = rng.normal();
        Eigen::MatrixXd sigma = random_spd(d, rng);
        Eigen::VectorXd w = maximize_deflection(delta, sigma);
        double best = deflection(w, delta, sigma);
        for (int k = 0; k < 200; ++k) {
            Eigen::VectorXd v(d);
            for (int i = 0; i < d; ++i) v[i] = rng.normal();
            v.normalize();
            CHECK(best >= deflection(v, delta, sigma) - 1e-9);
        }
    }
}

TEST_CASE("first stage solves the deflection problem on the conditional stats") {
    RngStream rng(21);
    int d = 4;
    LocalStats st;
    st.mean0 = Eigen::VectorXd::Zero(d);
    st.mean1 = Eigen::VectorXd::Zero(d);
    for (int i = 0; i < d; ++i) st.mean1[i] = 1.0 + rng.uniform();
    st.delta = st.mean1 - st.mean0;
    st.cov0 = random_spd(d, rng);
    st.cov1 = st.cov0;
    Eigen::MatrixXd le = Eigen::MatrixXd::Zero(d, d);
    le.diagonal().setConstant(0.2);
    Eigen::VectorXd c = stage_one(st, le);
    Eigen::VectorXd ref = maximize_deflection(st.delta, st.cov0 + le);
    CHECK((c - ref).lpNorm<Eigen::Infinity>() < 1e-9);
}

TEST_CASE("second stage with no message errors weights the whitened statistic uniformly") {
    // when the first stage already whitened the local statistic and no ME
    // variance remains, every scaled coordinate carries equal merit
    RngStream rng(22);
    int d = 3;
    LocalStats st;
    st.mean0 = Eigen::VectorXd::Zero(d);
    st.mean1 = Eigen::VectorXd::Zero(d);
    for (int i = 0; i < d; ++i) st.mean1[i] = 0.5 + rng.uniform();
    st.delta = st.mean1 - st.mean0;
    st.cov0 = random_spd(d, rng);
    st.cov1 = st.cov0;
    Eigen::MatrixXd le = Eigen::MatrixXd::Zero(d, d);
    Eigen::VectorXd c = stage_one(st, le);
    Eigen::VectorXd w = stage_two(c, st, le, Eigen::VectorXd::Zero(d));
    for (int i = 0; i < d; ++i)
        CHECK(w[i] == doctest::Approx(1.0 / std::sqrt(static_cast<double>(d))).epsilon(1e-6));
}

TEST_CASE("second stage downweights coordinates with heavy message errors") {
    RngStream rng(23);
    int d = 3;
    LocalStats st;
    st.mean0 = Eigen::VectorXd::Zero(d);
    st.mean1 = Eigen::VectorXd::Constant(d, 1.0);
    st.delta = st.mean1 - st.mean0;
    st.cov0 = Eigen::MatrixXd::Identity(d, d);
    st.cov1 = st.cov0;
    Eigen::MatrixXd le = Eigen::MatrixXd::Zero(d, d);
    Eigen::VectorXd me = Eigen::VectorXd::Zero(d);
    me[0] = 5.0;  // coordinate 0 arrives over a noisy link
    Eigen::VectorXd c = stage_one(st, le);
    Eigen::VectorXd w = stage_two(c, st, le, me);
    CHECK(w[0] < w[1]);
    CHECK(w[1] == doctest::Approx(w[2]).epsilon(1e-9));
}

TEST_CASE("threshold inverts the Gaussian false-alarm target") {
    for (double alpha : {0.01, 0.1, 0.3}) {
        double tau = threshold_for_alpha(alpha, 1.5, 4.0);
        CHECK(q_function((tau - 1.5) / 2.0) == doctest::Approx(alpha).epsilon(1e-10));
    }
}

TEST_CASE("eta test replaces suspiciously small entries with the analytic value") {
    Eigen::VectorXd offline(3), bp(3);
    offline << 1.0, 0.2, 0.05;
    bp << 0.9, 0.3, 0.2;
    EtaTestResult r = eta_test(offline, bp, 2.0);
    CHECK(r.selected[0] == doctest::Approx(1.0));   // ratio 0.9 < 2
    CHECK(r.selected[1] == doctest::Approx(0.2));   // ratio 1.5 < 2
    CHECK(r.selected[2] == doctest::Approx(0.2));   // ratio 4 >= 2 -> analytic
    CHECK(r.used_bp[2] == 1);
    CHECK(!r.zero_offline_flag);
    Eigen::VectorXd zeros = Eigen::VectorXd::Zero(3);
    EtaTestResult z = eta_test(zeros, bp, 2.0);
    CHECK(z.zero_offline_flag);
    CHECK((z.selected - bp).norm() == 0.0);
}

TEST_CASE("convergence normalization only rescales infeasible nodes") {
    Topology top = ring5();  // max degree 3 -> threshold 1/2
    std::vector<std::vector<int>> members(5);
    std::vector<Eigen::VectorXd> c(5);
    for (int j = 0; j < 5; ++j) {
        members[j] = neighborhood_of(top, j);
        c[j] = Eigen::VectorXd::Constant(static_cast<int>(members[j].size()), 0.3);
    }
    c[2][0] = 0.9;  // violates the contraction threshold
    auto out = normalize_for_convergence(c, top, members);
    CHECK((out[0] - c[0]).norm() == 0.0);  // feasible vector untouched
    for (int j = 0; j < 5; ++j) {
        int deg = static_cast<int>(members[j].size()) - 1;
        for (int i = 0; i < deg; ++i) CHECK(std::abs(out[j][i]) < 0.5);
        // direction preserved
        double ratio = out[j][0] / c[j][0];
        for (int i = 0; i <= deg; ++i)
            CHECK(out[j][i] == doctest::Approx(ratio * c[j][i]).epsilon(1e-12));
    }
}

TEST_CASE("fusion weights survive a save/load round trip") {
    Topology top = ring5();
    RngStream rng(31);
    FusionWeights fw;
    fw.tau.resize(5);
    for (int j = 0; j < 5; ++j) {
        fw.members.push_back(neighborhood_of(top, j));
        int d = static_cast<int>(fw.members.back().size());
        Eigen::VectorXd c(d), w(d);
        for (int i = 0; i < d; ++i) {
            c[i] = rng.uniform();
            w[i] = rng.uniform();
        }
        fw.c.push_back(c / c.norm());
        fw.w.push_back(w / w.norm());
        fw.tau[j] = rng.normal();
    }
    std::string path = "fusion_roundtrip.tmp";
    save_fusion_weights(fw, path);
    FusionWeights back = load_fusion_weights(path);
    std::remove(path.c_str());
    REQUIRE(back.c.size() == 5);
    for (int j = 0; j < 5; ++j) {
        CHECK((back.c[j] - fw.c[j]).lpNorm<Eigen::Infinity>() < 1e-12);
        CHECK((back.w[j] - fw.w[j]).lpNorm<Eigen::Infinity>() < 1e-12);
        CHECK(back.tau[j] == doctest::Approx(fw.tau[j]).epsilon(1e-12));
        CHECK(back.members[j] == fw.members[j]);
    }
}

TEST_CASE("deployment reproduces the intended first-order statistic") {
    // the deployed weighted linear BP must have first-order gamma
    // coefficients proportional to w o c with a unit self term
    Topology top = ring5();
    RngStream rng(37);
    FusionWeights fw;
    fw.tau = Eigen::VectorXd::Zero(5);
    for (int j = 0; j < 5; ++j) {
        fw.members.push_back(neighborhood_of(top, j));
        int d = static_cast<int>(fw.members.back().size());
        Eigen::VectorXd c(d), w(d);
        for (int i = 0; i < d; ++i) {
            c[i] = 0.2 + 0.3 * rng.uniform();
            w[i] = 0.3 + 0.5 * rng.uniform();
        }
        fw.c.push_back(c / c.norm());
        fw.w.push_back(w / w.norm());
    }
    DeployedDetector det = deploy_fusion_weights(fw, top);
    for (int j = 0; j < 5; ++j) {
        const auto& in = top.in_edges(j);
        int d = static_cast<int>(fw.members[j].size());
        double self_vc = fw.w[j][d - 1] * fw.c[j][d - 1];
        for (size_t i = 0; i < in.size(); ++i) {
            int sender = top.dir_src(in[i]);
            int pos = -1;
            for (int k = 0; k < d - 1; ++k)
                if (fw.members[j][k] == sender) pos = k;
            REQUIRE(pos >= 0);
            // first-order coefficient = decision weight * message coefficient
            double coeff = det.decision_weights[j][i] * det.message_coefficients(j, sender);
            CHECK(coeff ==
                  doctest::Approx(fw.w[j][pos] * fw.c[j][pos] / self_vc).epsilon(1e-9));
        }
    }
}
