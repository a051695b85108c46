#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "bpdet/metrics.hpp"
#include "doctest.h"
#include "json.hpp"

using namespace bpdet;

namespace {
MetricsTable sample_table() {
    MetricsTable t;
    t.add({"figure1", "dsnr_vs_iterations", "bp_le", 0, 10.0, "dsnr_db", 12.3456789012345, 2000, 7});
    t.add({"figure1", "dsnr_vs_iterations", "bp_me", 3, 10.0, "dsnr_db", -3.5, 2000, 7});
    t.add({"figure3", "roc_faulty_nodes", "optimized", 0, 0.25, "pd", 0.875, 1000, 7});
    return t;
}
}  // namespace

TEST_CASE("table lookup by variant, metric, node, x") {
    MetricsTable t = sample_table();
    CHECK(t.value("bp_me", "dsnr_db", 3, 10.0) == doctest::Approx(-3.5));
    CHECK(t.has("bp_le", "dsnr_db", 0, 10.0));
    CHECK(!t.has("bp_le", "dsnr_db", 1, 10.0));
    CHECK_THROWS(t.value("missing", "dsnr_db", 0, 10.0));
}

TEST_CASE("csv round trip preserves every field at full precision") {
    MetricsTable t = sample_table();
    std::string path = "metrics_roundtrip.tmp.csv";
    emit_csv(t, path);
    MetricsTable back = load_csv(path);
    std::remove(path.c_str());
    REQUIRE(back.records.size() == t.records.size());
    for (size_t i = 0; i < t.records.size(); ++i) {
        const auto& a = t.records[i];
        const auto& b = back.records[i];
        CHECK(a.experiment == b.experiment);
        CHECK(a.recipe == b.recipe);
        CHECK(a.variant == b.variant);
        CHECK(a.node == b.node);
        CHECK(a.x == b.x);
        CHECK(a.metric == b.metric);
        CHECK(a.value == b.value);  // bitwise: full round-trip precision
        CHECK(a.trials == b.trials);
        CHECK(a.seed == b.seed);
    }
}

TEST_CASE("csv header matches the documented schema") {
    std::string path = "metrics_header.tmp.csv";
    emit_csv(MetricsTable{}, path);
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    in.close();
    std::remove(path.c_str());
    CHECK(header == "experiment,recipe,variant,node,x,metric,value,trials,seed");
}

TEST_CASE("json output mirrors the records") {
    MetricsTable t = sample_table();
    std::string path = "metrics_roundtrip.tmp.json";
    emit_json(t, path);
    std::ifstream in(path);
    nlohmann::json j = nlohmann::json::parse(in);
    in.close();
    std::remove(path.c_str());
    REQUIRE(j.is_array());
    REQUIRE(j.size() == t.records.size());
    CHECK(j[0]["variant"] == "bp_le");
    CHECK(j[0]["metric"] == "dsnr_db");
    CHECK(j[0]["value"].get<double>() == doctest::Approx(12.3456789012345).epsilon(1e-12));
    CHECK(j[2]["node"] == 0);
    CHECK(j[2]["x"].get<double>() == doctest::Approx(0.25));
}
