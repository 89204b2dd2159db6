#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace jstable {

// mt19937_64 core with hand-rolled transforms so draws do not depend on the
// standard library's distribution implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next_u64() { return eng_(); }
    double uniform();                       // [0,1), 53-bit
    double uniform(double lo, double hi);
    double normal();                        // Marsaglia polar
    std::size_t below(std::size_t n);       // unbiased in [0,n)
    bool bernoulli(double p) { return uniform() < p; }

    template <class T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
    }

    std::vector<std::size_t> permutation(std::size_t n);

    // independent stream keyed by (this stream's seed material, key)
    Rng split(std::uint64_t key);

private:
    std::mt19937_64 eng_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t key);

}  // namespace jstable
