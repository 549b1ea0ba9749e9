#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>

namespace optidice {

/// Deterministic pseudo-random stream used by every randomized operation.
///
/// All randomness in the library flows through explicit seeds; there is no
/// global RNG. Seeds for sub-tasks are derived with `derive_seed` so that
/// results are reproducible independently of scheduling or worker count.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform draw in [0, 1) with 53 bits of resolution.
    double uniform01() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    /// Uniform integer in {0, ..., n-1}.
    int uniform_int(int n) {
        int k = static_cast<int>(uniform01() * n);
        return k >= n ? n - 1 : k;
    }

    /// Standard exponential variate.
    double exponential();

    /// Samples an index from an (approximately normalized) probability vector.
    int categorical(std::span<const double> probs);

    std::mt19937_64& engine() { return engine_; }

  private:
    std::mt19937_64 engine_;
};

/// SplitMix64 finalizer; mixes a 64-bit word into a well-distributed one.
std::uint64_t splitmix64(std::uint64_t x);

/// Derives an independent stream seed from a master seed and a path of
/// integers identifying the sub-task (run id, trajectory count, ...).
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path);

} // namespace optidice
