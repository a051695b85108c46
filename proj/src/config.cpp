#include "bpdet/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace bpdet {

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

double parse_double(const ConfigEntry& e, const std::string& key) {
    std::string v = lower(trim(e.value));
    if (v == "inf" || v == "+inf" || v == "infinity") return kInfSnrDb;
    try {
        size_t pos;
        double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("");
        return d;
    } catch (...) {
        throw ConfigError("key '" + key + "': expected a number, got '" + e.value + "'", e.line);
    }
}

long parse_long(const ConfigEntry& e, const std::string& key) {
    try {
        size_t pos;
        long d = std::stol(trim(e.value), &pos, 10);
        if (pos != trim(e.value).size()) throw std::invalid_argument("");
        return d;
    } catch (...) {
        throw ConfigError("key '" + key + "': expected an integer, got '" + e.value + "'",
                          e.line);
    }
}

std::vector<double> parse_double_list(const ConfigEntry& e, const std::string& key) {
    std::vector<double> out;
    for (const auto& item : split_list(e.value)) out.push_back(parse_double({item, e.line}, key));
    return out;
}

std::vector<int> parse_int_list(const ConfigEntry& e, const std::string& key) {
    std::vector<int> out;
    for (const auto& item : split_list(e.value))
        out.push_back(static_cast<int>(parse_long({item, e.line}, key)));
    return out;
}

const ConfigEntry* find(const ParsedConfig& config, const std::string& section,
                        const std::string& key) {
    auto s = config.find(section);
    if (s == config.end()) return nullptr;
    auto k = s->second.find(key);
    if (k == s->second.end()) return nullptr;
    k->second.consumed = true;
    return &k->second;
}

}  // namespace

ParsedConfig parse_config_text(const std::string& text) {
    ParsedConfig out;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        size_t comment = line.find_first_of("#;");
        if (comment != std::string::npos) line.erase(comment);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("unterminated section header", lineno);
            section = lower(trim(line.substr(1, line.size() - 2)));
            if (section.empty()) throw ConfigError("empty section name", lineno);
            out[section];
            continue;
        }
        size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("expected 'key = value' or '[section]'", lineno);
        if (section.empty())
            throw ConfigError("key outside of any [section]", lineno);
        std::string key = lower(trim(line.substr(0, eq)));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError("empty key", lineno);
        if (out[section].count(key))
            throw ConfigError("duplicate key '" + key + "'", lineno);
        out[section][key] = ConfigEntry{value, lineno};
    }
    return out;
}

ParsedConfig load_config_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << f.rdbuf();
    return parse_config_text(buf.str());
}

ExperimentSpec figure1_preset() {
    ExperimentSpec spec;
    spec.topology = Topology(5, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 0}, {1, 3}});
    spec.couplings = CouplingSet(spec.topology, 0.4);
    spec.scenario.node_count = 5;
    spec.scenario.samples_per_slot = 100;
    spec.scenario.noise_var = 1.0;
    spec.scenario.p_on = 0.5;
    spec.scenario.rho_tx = 0.3;
    spec.scenario.statistic = LocalStatistic::energy;
    spec.scenario.window_length = 2000;
    spec.scenario.signature_seed = 7;
    spec.scenario.transmitters = {
        {{0, 1, 2}, {-5.0, -8.0, -10.0}},
        {{2, 3, 4}, {-10.0, -8.0, -5.0}},
    };
    spec.errors = ErrorConfig::error_free(spec.topology);
    spec.engine.linear = true;
    spec.engine.iterations = 50;
    spec.experiment.seed = 1;
    return spec;
}

namespace {

Topology topology_from(const ParsedConfig& config) {
    const ConfigEntry* nodes = find(config, "topology", "nodes");
    const ConfigEntry* edges = find(config, "topology", "edges");
    if (!nodes) throw ConfigError("[topology] is missing required key 'nodes'");
    if (!edges) throw ConfigError("[topology] is missing required key 'edges'");
    int n = static_cast<int>(parse_long(*nodes, "nodes"));
    if (n < 1) throw ConfigError("'nodes' must be >= 1", nodes->line);
    std::vector<std::pair<int, int>> edge_list;
    for (const auto& item : split_list(edges->value)) {
        size_t dash = item.find('-');
        if (dash == std::string::npos)
            throw ConfigError("edge '" + item + "': expected form a-b (1-based)", edges->line);
        int a = static_cast<int>(parse_long({item.substr(0, dash), edges->line}, "edges"));
        int b = static_cast<int>(parse_long({item.substr(dash + 1), edges->line}, "edges"));
        if (a < 1 || a > n || b < 1 || b > n || a == b)
            throw ConfigError("edge '" + item + "': node labels must be distinct, in 1.." +
                                  std::to_string(n),
                              edges->line);
        edge_list.emplace_back(a - 1, b - 1);
    }
    return Topology(n, std::move(edge_list));
}

CouplingSet couplings_from(const ParsedConfig& config, const Topology& topology) {
    const ConfigEntry* j = find(config, "couplings", "j");
    const ConfigEntry* theta = find(config, "couplings", "theta");
    std::vector<double> per_edge(topology.edge_count(), 0.0);
    if (j) {
        auto vals = parse_double_list(*j, "j");
        if (vals.size() == 1)
            std::fill(per_edge.begin(), per_edge.end(), vals[0]);
        else if (static_cast<int>(vals.size()) == topology.edge_count())
            per_edge = vals;
        else
            throw ConfigError("'j' needs 1 value or one per edge (" +
                                  std::to_string(topology.edge_count()) + ")",
                              j->line);
    }
    std::vector<double> th(topology.node_count(), 0.0);
    if (theta) {
        auto vals = parse_double_list(*theta, "theta");
        if (vals.size() == 1)
            std::fill(th.begin(), th.end(), vals[0]);
        else if (static_cast<int>(vals.size()) == topology.node_count())
            th = vals;
        else
            throw ConfigError("'theta' needs 1 value or one per node", theta->line);
    }
    return CouplingSet(topology, std::move(per_edge), std::move(th));
}

void scenario_from(const ParsedConfig& config, ScenarioConfig& sc, const Topology& topology) {
    sc.node_count = topology.node_count();
    if (auto* e = find(config, "scenario", "samples_per_slot"))
        sc.samples_per_slot = static_cast<int>(parse_long(*e, "samples_per_slot"));
    if (auto* e = find(config, "scenario", "noise_var")) sc.noise_var = parse_double(*e, "noise_var");
    if (auto* e = find(config, "scenario", "p_on")) sc.p_on = parse_double(*e, "p_on");
    if (auto* e = find(config, "scenario", "rho_tx")) sc.rho_tx = parse_double(*e, "rho_tx");
    if (auto* e = find(config, "scenario", "signature_seed"))
        sc.signature_seed = static_cast<std::uint64_t>(parse_long(*e, "signature_seed"));
    if (auto* e = find(config, "scenario", "window_length"))
        sc.window_length = static_cast<int>(parse_long(*e, "window_length"));
    if (auto* e = find(config, "scenario", "statistic")) {
        std::string v = lower(trim(e->value));
        if (v == "energy")
            sc.statistic = LocalStatistic::energy;
        else if (v == "matched_filter" || v == "llr")
            sc.statistic = LocalStatistic::matched_filter;
        else
            throw ConfigError("'statistic' must be energy or matched_filter", e->line);
    }
    sc.transmitters.clear();
    for (int t = 1;; ++t) {
        std::string base = "tx" + std::to_string(t);
        auto* nodes = find(config, "scenario", base + "_nodes");
        auto* snr = find(config, "scenario", base + "_snr_db");
        if (!nodes && !snr) break;
        if (!nodes || !snr)
            throw ConfigError("transmitter " + base + " needs both " + base + "_nodes and " +
                              base + "_snr_db");
        TransmitterSpec tx;
        tx.covered_nodes = parse_int_list(*nodes, base + "_nodes");
        for (int& v : tx.covered_nodes) {
            if (v < 1 || v > topology.node_count())
                throw ConfigError(base + "_nodes: labels must be 1.." +
                                      std::to_string(topology.node_count()),
                                  nodes->line);
            v -= 1;
        }
        tx.snr_db = parse_double_list(*snr, base + "_snr_db");
        if (tx.snr_db.size() != tx.covered_nodes.size())
            throw ConfigError(base + ": node list and SNR list lengths differ", snr->line);
        sc.transmitters.push_back(std::move(tx));
    }
    try {
        sc.validate();
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
}

ErrorConfig errors_from(const ParsedConfig& config, const Topology& topology) {
    ErrorConfig ec = ErrorConfig::error_free(topology);
    auto fill = [&](const char* key, std::vector<double>& target) {
        if (auto* e = find(config, "errors", key)) {
            auto vals = parse_double_list(*e, key);
            if (vals.size() == 1)
                std::fill(target.begin(), target.end(), vals[0]);
            else if (vals.size() == target.size())
                target = vals;
            else
                throw ConfigError(std::string("'") + key + "' needs 1 value or one per node",
                                  e->line);
        }
    };
    fill("le_snr_db", ec.le_snr_db);
    fill("me_snr_db", ec.me_snr_db);
    if (auto* e = find(config, "errors", "faulty_nodes")) {
        auto nodes = parse_int_list(*e, "faulty_nodes");
        double le = kInfSnrDb, me = kInfSnrDb;
        if (auto* f = find(config, "errors", "faulty_le_snr_db"))
            le = parse_double(*f, "faulty_le_snr_db");
        if (auto* f = find(config, "errors", "faulty_me_snr_db"))
            me = parse_double(*f, "faulty_me_snr_db");
        for (int v : nodes) {
            if (v < 1 || v > topology.node_count())
                throw ConfigError("'faulty_nodes': labels must be 1.." +
                                      std::to_string(topology.node_count()),
                                  e->line);
            ec.le_snr_db[v - 1] = le;
            ec.me_snr_db[v - 1] = me;
        }
    }
    return ec;
}

void engine_from(const ParsedConfig& config, EngineConfig& eng) {
    if (auto* e = find(config, "engine", "mode")) {
        std::string v = lower(trim(e->value));
        if (v == "linear")
            eng.linear = true;
        else if (v == "exact")
            eng.linear = false;
        else
            throw ConfigError("'mode' must be exact or linear", e->line);
    }
    if (auto* e = find(config, "engine", "iterations")) {
        eng.iterations = static_cast<int>(parse_long(*e, "iterations"));
        if (eng.iterations < 1) throw ConfigError("'iterations' must be >= 1", e->line);
    }
}

void experiment_from(const ParsedConfig& config, ExperimentConfig& ex) {
    if (auto* e = find(config, "experiment", "recipe")) {
        std::string v = lower(trim(e->value));
        if (v == "dsnr_vs_iterations")
            ex.recipe = Recipe::dsnr_vs_iterations;
        else if (v == "roc_faulty_nodes")
            ex.recipe = Recipe::roc_faulty_nodes;
        else if (v == "custom")
            ex.recipe = Recipe::custom;
        else
            throw ConfigError(
                "'recipe' must be dsnr_vs_iterations, roc_faulty_nodes or custom", e->line);
        ex.name = v;
    }
    if (auto* e = find(config, "experiment", "trials")) {
        ex.trials = parse_long(*e, "trials");
        if (ex.trials < 1) throw ConfigError("'trials' must be >= 1", e->line);
    }
    if (auto* e = find(config, "experiment", "seed"))
        ex.seed = static_cast<std::uint64_t>(parse_long(*e, "seed"));
    if (auto* e = find(config, "experiment", "iteration_grid"))
        ex.iteration_grid = parse_int_list(*e, "iteration_grid");
    if (auto* e = find(config, "experiment", "calibration_slots")) {
        ex.calibration_slots = static_cast<int>(parse_long(*e, "calibration_slots"));
        if (ex.calibration_slots < 100)
            throw ConfigError("'calibration_slots' must be >= 100", e->line);
    }
    if (auto* e = find(config, "experiment", "adaptation_window"))
        ex.adaptation_window = static_cast<int>(parse_long(*e, "adaptation_window"));
    if (auto* e = find(config, "experiment", "link_copies")) {
        ex.link_copies = static_cast<int>(parse_long(*e, "link_copies"));
        if (ex.link_copies < 1) throw ConfigError("'link_copies' must be >= 1", e->line);
    }
    if (auto* e = find(config, "experiment", "roc_pf_point"))
        ex.roc_pf_point = parse_double(*e, "roc_pf_point");
    if (auto* e = find(config, "experiment", "roc_thresholds"))
        ex.roc_thresholds = static_cast<int>(parse_long(*e, "roc_thresholds"));
}

const std::set<std::string> kKnownSections = {"topology", "couplings", "scenario",
                                              "errors",   "engine",    "experiment"};
const std::map<std::string, std::set<std::string>> kKnownKeys = {
    {"topology", {"nodes", "edges"}},
    {"couplings", {"j", "theta"}},
    {"scenario",
     {"samples_per_slot", "noise_var", "p_on", "rho_tx", "statistic", "signature_seed",
      "window_length"}},
    {"errors", {"le_snr_db", "me_snr_db", "faulty_nodes", "faulty_le_snr_db", "faulty_me_snr_db"}},
    {"engine", {"mode", "iterations"}},
    {"experiment",
     {"recipe", "trials", "seed", "iteration_grid", "calibration_slots", "adaptation_window",
      "link_copies", "roc_pf_point", "roc_thresholds"}},
};

bool known_key(const std::string& section, const std::string& key) {
    auto it = kKnownKeys.find(section);
    if (it == kKnownKeys.end()) return false;
    if (it->second.count(key)) return true;
    // txN_nodes / txN_snr_db families
    if (section == "scenario" && key.rfind("tx", 0) == 0 &&
        (key.find("_nodes") != std::string::npos || key.find("_snr_db") != std::string::npos))
        return true;
    return false;
}

}  // namespace

ExperimentSpec spec_from_config(const ParsedConfig& config) {
    ExperimentSpec spec = figure1_preset();
    if (config.count("topology")) {
        spec.topology = topology_from(config);
        spec.couplings = CouplingSet(spec.topology, 0.4);
        spec.errors = ErrorConfig::error_free(spec.topology);
        spec.scenario.transmitters.clear();
        spec.scenario.node_count = spec.topology.node_count();
    }
    if (config.count("couplings")) spec.couplings = couplings_from(config, spec.topology);
    if (config.count("scenario")) scenario_from(config, spec.scenario, spec.topology);
    if (config.count("errors")) spec.errors = errors_from(config, spec.topology);
    engine_from(config, spec.engine);
    experiment_from(config, spec.experiment);
    if (spec.scenario.transmitters.empty())
        throw ConfigError("[scenario] defines no transmitters (txN_nodes / txN_snr_db)");
    return spec;
}

std::vector<std::string> validate_config(const ParsedConfig& config) {
    std::vector<std::string> problems;
    try {
        spec_from_config(config);
    } catch (const ConfigError& e) {
        problems.push_back(e.what());
    }
    for (const auto& [section, keys] : config) {
        if (!kKnownSections.count(section)) {
            problems.push_back("warning: unknown section [" + section + "]");
            continue;
        }
        for (const auto& [key, entry] : keys)
            if (!known_key(section, key))
                problems.push_back("warning: line " + std::to_string(entry.line) +
                                   ": unknown key '" + key + "' in [" + section + "]");
    }
    return problems;
}

}  // namespace bpdet
