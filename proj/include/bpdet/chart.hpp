#pragma once

#include <string>
#include <vector>

#include "bpdet/metrics.hpp"

namespace bpdet {

struct ChartConfig {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::string metric = "dsnr_db";   // y values
    std::string x_metric;             // empty: use the record's x column
    int node = 0;                     // network aggregate by default
    std::vector<std::string> variants;  // empty: all variants present
    int width = 860;
    int height = 540;
};

// Deterministic self-contained SVG line chart of one metric across variants.
void render_chart(const MetricsTable& table, const ChartConfig& config,
                  const std::string& path);

}  // namespace bpdet
