// Compares the serial reference trial loop against the parallel one and
// verifies that the outputs are bit-identical.
#include <chrono>
#include <cstdio>
#include <thread>

#include "bpdet/config.hpp"
#include "bpdet/experiments.hpp"

using namespace bpdet;

namespace {
double timed_run(const ExperimentSpec& spec, int threads, MetricsTable& out) {
    auto start = std::chrono::steady_clock::now();
    out = run_dsnr_recipe(spec, threads);
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}
}  // namespace

int main(int argc, char** argv) {
    long trials = argc > 1 ? std::atol(argv[1]) : 4000;
    ExperimentSpec spec = figure1_preset();
    spec.errors = ErrorConfig::uniform(spec.topology, 10.0, 10.0);
    spec.engine.linear = true;
    spec.experiment.trials = trials;
    spec.experiment.calibration_slots = 2000;

    int hw = static_cast<int>(std::thread::hardware_concurrency());
    if (hw < 2) hw = 2;

    MetricsTable serial, parallel;
    double t1 = timed_run(spec, 1, serial);
    double tn = timed_run(spec, hw, parallel);

    bool identical = serial.records.size() == parallel.records.size();
    for (size_t i = 0; identical && i < serial.records.size(); ++i)
        if (serial.records[i].value != parallel.records[i].value ||
            serial.records[i].variant != parallel.records[i].variant)
            identical = false;

    std::printf("trials: %ld, iterations: %d\n", trials, spec.engine.iterations);
    std::printf("serial reference: %.2fs\n", t1);
    std::printf("parallel (%d workers): %.2fs  (speedup %.2fx)\n", hw, tn, t1 / tn);
    std::printf("outputs bit-identical: %s\n", identical ? "yes" : "NO");
    return identical ? 0 : 1;
}
