#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace bpdet {

// Long-format result record. node is 1-based; 0 = network-level aggregate.
// x is the recipe's sweep coordinate (iteration count, threshold index, ...).
struct MetricRecord {
    std::string experiment;
    std::string recipe;
    std::string variant;
    int node = 0;
    double x = 0.0;
    std::string metric;
    double value = 0.0;
    long trials = 0;
    std::uint64_t seed = 0;
};

struct MetricsTable {
    std::vector<MetricRecord> records;

    void add(MetricRecord r) { records.push_back(std::move(r)); }
    // first value matching the filters; throws when absent
    double value(const std::string& variant, const std::string& metric, int node,
                 double x) const;
    bool has(const std::string& variant, const std::string& metric, int node, double x) const;
};

void emit_csv(const MetricsTable& table, const std::string& path);
void emit_json(const MetricsTable& table, const std::string& path);
MetricsTable load_csv(const std::string& path);

}  // namespace bpdet
