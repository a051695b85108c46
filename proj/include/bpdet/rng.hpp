#pragma once

#include <cmath>
#include <cstdint>

namespace bpdet {

// Counter-free splitmix64 stream. All Monte Carlo randomness goes through
// this generator so that results are bit-identical across standard library
// versions and across worker counts: a stream is a pure function of
// (master seed, trial index, substream id).
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : state_(seed) {}

    static std::uint64_t derive(std::uint64_t master, std::uint64_t trial,
                                std::uint64_t substream) {
        std::uint64_t s = mix(master ^ 0x9e3779b97f4a7c15ULL);
        s = mix(s ^ mix(trial + 0xbf58476d1ce4e5b9ULL));
        s = mix(s ^ mix(substream + 0x94d049bb133111ebULL));
        return s;
    }

    static RngStream for_trial(std::uint64_t master, std::uint64_t trial,
                               std::uint64_t substream) {
        return RngStream(derive(master, trial, substream));
    }

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        return mix(z);
    }

    // uniform in (0, 1); never returns 0 so it is safe inside log()
    double uniform() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    // Box-Muller with a cached spare; standard normal
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    bool bernoulli(double p) { return uniform() < p; }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t state_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

// Substream ids used by the harness so paired variants consume identical
// signal / LE realizations while ME draws stay variant-local.
namespace substream {
inline constexpr std::uint64_t signal = 0;
inline constexpr std::uint64_t le = 1;
inline constexpr std::uint64_t me_base = 16;  // + variant index
}  // namespace substream

}  // namespace bpdet
