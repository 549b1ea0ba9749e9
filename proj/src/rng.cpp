#include "optidice/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace optidice {

double Rng::exponential() {
    // 1 - u is in (0, 1], keeping the log finite.
    return -std::log(1.0 - uniform01());
}

int Rng::categorical(std::span<const double> probs) {
    if (probs.empty()) {
        throw std::invalid_argument("categorical: empty probability vector");
    }
    const double u = uniform01();
    double cum = 0.0;
    int last_positive = -1;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        if (probs[i] > 0.0) {
            last_positive = static_cast<int>(i);
        }
        cum += probs[i];
        if (u < cum) {
            return static_cast<int>(i);
        }
    }
    // Rounding can leave cum marginally below 1; fall back to the last
    // positive-probability index.
    if (last_positive < 0) {
        throw std::invalid_argument("categorical: all probabilities are zero");
    }
    return last_positive;
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
    std::uint64_t h = splitmix64(master);
    for (std::uint64_t p : path) {
        h = splitmix64(h ^ splitmix64(p));
    }
    return h;
}

} // namespace optidice
