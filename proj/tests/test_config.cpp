#include <string>

#include "bpdet/config.hpp"
#include "doctest.h"

using namespace bpdet;

TEST_CASE("ini parsing: sections, comments, whitespace") {
    ParsedConfig cfg = parse_config_text(
        "# leading comment\n"
        "[alpha]\n"
        "key = some value  ; trailing comment\n"
        "\n"
        "other=  spaced   out  \n"
        "[beta]\n"
        "key = 2\n");
    REQUIRE(cfg.count("alpha") == 1);
    REQUIRE(cfg.count("beta") == 1);
    CHECK(cfg["alpha"]["key"].value == "some value");
    CHECK(cfg["alpha"]["other"].value == "spaced   out");
    CHECK(cfg["beta"]["key"].value == "2");
    CHECK(cfg["beta"]["key"].line == 7);
}

TEST_CASE("ini parsing reports the offending line") {
    try {
        parse_config_text("[ok]\ngood = 1\nthis line has no equals sign\n");
        FAIL("expected a parse error");
    } catch (const ConfigError& e) {
        CHECK(e.line_number == 3);
    }
}

TEST_CASE("reference preset: five-node ring with a chord") {
    ExperimentSpec spec = figure1_preset();
    CHECK(spec.scenario.node_count == 5);
    CHECK(spec.topology.edge_count() == 6);
    CHECK(spec.topology.has_edge(0, 1));
    CHECK(spec.topology.has_edge(4, 0));
    CHECK(spec.topology.has_edge(1, 3));
    for (int e = 0; e < 6; ++e) CHECK(spec.couplings.j(e) == doctest::Approx(0.4));
    CHECK(spec.scenario.samples_per_slot == 100);
    CHECK(spec.scenario.p_on == doctest::Approx(0.5));
    CHECK(spec.scenario.rho_tx == doctest::Approx(0.3));
    REQUIRE(spec.scenario.transmitters.size() == 2);
    CHECK(spec.scenario.transmitters[0].covered_nodes == std::vector<int>{0, 1, 2});
    CHECK(spec.scenario.transmitters[1].covered_nodes == std::vector<int>{2, 3, 4});
    CHECK(spec.experiment.seed == 1);
    CHECK(spec.engine.iterations == 50);
    // preset ships error-free; recipes inject their own error settings
    CalibratedErrorSampler s =
        calibrate(std::vector<double>(5, 1.0), spec.errors, spec.topology);
    CHECK(!s.any_le());
    CHECK(!s.any_me());
}

TEST_CASE("config overrides layer onto the preset") {
    ParsedConfig cfg = parse_config_text(
        "[errors]\n"
        "faulty_nodes = 1,4\n"
        "faulty_le_snr_db = 10\n"
        "faulty_me_snr_db = 20\n"
        "[experiment]\n"
        "recipe = roc_faulty_nodes\n"
        "trials = 1234\n"
        "seed = 9\n");
    ExperimentSpec spec = spec_from_config(cfg);
    CHECK(spec.experiment.recipe == Recipe::roc_faulty_nodes);
    CHECK(spec.experiment.trials == 1234);
    CHECK(spec.experiment.seed == 9);
    // faulty lists are 1-based in the file, 0-based internally
    CHECK(spec.errors.le_snr_db[0] == doctest::Approx(10.0));
    CHECK(spec.errors.le_snr_db[3] == doctest::Approx(10.0));
    CHECK(spec.errors.le_snr_db[1] == kInfSnrDb);
    CHECK(spec.errors.me_snr_db[0] == doctest::Approx(20.0));
}

TEST_CASE("invalid values surface as config errors") {
    CHECK_THROWS_AS(
        spec_from_config(parse_config_text("[experiment]\ntrials = 0\n")), ConfigError);
    CHECK_THROWS_AS(
        spec_from_config(parse_config_text("[experiment]\nrecipe = no_such_recipe\n")),
        ConfigError);
    CHECK_THROWS_AS(
        spec_from_config(parse_config_text("[scenario]\np_on = 1.5\n")), ConfigError);
    CHECK_THROWS_AS(
        spec_from_config(parse_config_text("[scenario]\nnoise_var = -1\n")), ConfigError);
}

TEST_CASE("lint flags unknown keys as warnings") {
    ParsedConfig cfg = parse_config_text(
        "[experiment]\n"
        "trials = 10\n"
        "definitely_not_a_key = 3\n");
    auto problems = validate_config(cfg);
    bool warned = false;
    for (const auto& p : problems)
        if (p.rfind("warning:", 0) == 0 && p.find("definitely_not_a_key") != std::string::npos)
            warned = true;
    CHECK(warned);
}
