#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "bpdet/chart.hpp"
#include "bpdet/metrics.hpp"
#include "doctest.h"

using namespace bpdet;

namespace {
std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

MetricsTable curve_table() {
    MetricsTable t;
    for (int x = 1; x <= 5; ++x) {
        t.add({"figure1", "dsnr_vs_iterations", "bp_le", 0, double(x), "dsnr_db",
               10.0 + 0.5 * x, 100, 1});
        t.add({"figure1", "dsnr_vs_iterations", "bp_me", 0, double(x), "dsnr_db",
               8.0 - 0.25 * x, 100, 1});
    }
    return t;
}
}  // namespace

TEST_CASE("chart rendering is byte-identical across runs") {
    MetricsTable t = curve_table();
    ChartConfig cfg;
    cfg.title = "decision signal-to-noise";
    cfg.x_label = "iterations";
    cfg.y_label = "dB";
    render_chart(t, cfg, "chart_a.tmp.svg");
    render_chart(t, cfg, "chart_b.tmp.svg");
    std::string a = slurp("chart_a.tmp.svg");
    std::string b = slurp("chart_b.tmp.svg");
    std::remove("chart_a.tmp.svg");
    std::remove("chart_b.tmp.svg");
    REQUIRE(!a.empty());
    CHECK(a == b);
    // self-contained SVG with one series per variant
    CHECK(a.find("<svg") != std::string::npos);
    CHECK(a.find("</svg>") != std::string::npos);
    CHECK(a.find("bp_le") != std::string::npos);
    CHECK(a.find("bp_me") != std::string::npos);
}

TEST_CASE("variant filter restricts the drawn series") {
    MetricsTable t = curve_table();
    ChartConfig cfg;
    cfg.variants = {"bp_le"};
    render_chart(t, cfg, "chart_c.tmp.svg");
    std::string a = slurp("chart_c.tmp.svg");
    std::remove("chart_c.tmp.svg");
    CHECK(a.find("bp_le") != std::string::npos);
    CHECK(a.find("bp_me") == std::string::npos);
}
