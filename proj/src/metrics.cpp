#include "bpdet/metrics.hpp"

#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <stdexcept>

namespace bpdet {

namespace {
constexpr const char* kHeader = "experiment,recipe,variant,node,x,metric,value,trials,seed";

std::string fmt(double v) {
    std::ostringstream s;
    s.precision(17);
    s << v;
    return s.str();
}
}  // namespace

double MetricsTable::value(const std::string& variant, const std::string& metric, int node,
                           double x) const {
    for (const auto& r : records)
        if (r.variant == variant && r.metric == metric && r.node == node && r.x == x)
            return r.value;
    throw std::out_of_range("MetricsTable: no record " + variant + "/" + metric + "/node=" +
                            std::to_string(node) + "/x=" + std::to_string(x));
}

bool MetricsTable::has(const std::string& variant, const std::string& metric, int node,
                       double x) const {
    for (const auto& r : records)
        if (r.variant == variant && r.metric == metric && r.node == node && r.x == x)
            return true;
    return false;
}

void emit_csv(const MetricsTable& table, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("emit_csv: cannot write " + path);
    f << kHeader << "\n";
    for (const auto& r : table.records)
        f << r.experiment << ',' << r.recipe << ',' << r.variant << ',' << r.node << ','
          << fmt(r.x) << ',' << r.metric << ',' << fmt(r.value) << ',' << r.trials << ','
          << r.seed << "\n";
}

void emit_json(const MetricsTable& table, const std::string& path) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& r : table.records)
        out.push_back({{"experiment", r.experiment},
                       {"recipe", r.recipe},
                       {"variant", r.variant},
                       {"node", r.node},
                       {"x", r.x},
                       {"metric", r.metric},
                       {"value", r.value},
                       {"trials", r.trials},
                       {"seed", r.seed}});
    std::ofstream f(path);
    if (!f) throw std::runtime_error("emit_json: cannot write " + path);
    f << out.dump(2) << "\n";
}

MetricsTable load_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("load_csv: cannot read " + path);
    std::string line;
    if (!std::getline(f, line) || line != kHeader)
        throw std::runtime_error("load_csv: bad or missing header in " + path);
    MetricsTable table;
    int lineno = 1;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream in(line);
        std::string field;
        std::vector<std::string> fields;
        while (std::getline(in, field, ',')) fields.push_back(field);
        if (fields.size() != 9)
            throw std::runtime_error("load_csv: line " + std::to_string(lineno) +
                                     ": expected 9 fields");
        MetricRecord r;
        r.experiment = fields[0];
        r.recipe = fields[1];
        r.variant = fields[2];
        r.node = std::stoi(fields[3]);
        r.x = std::stod(fields[4]);
        r.metric = fields[5];
        r.value = std::stod(fields[6]);
        r.trials = std::stol(fields[7]);
        r.seed = std::stoull(fields[8]);
        table.records.push_back(std::move(r));
    }
    return table;
}

}  // namespace bpdet
