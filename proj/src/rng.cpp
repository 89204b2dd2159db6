#include "jstable/rng.hpp"
#include "jstable/error.hpp"

#include <cmath>
#include <numeric>

namespace jstable {

const char* to_string(ErrorKind k) {
    switch (k) {
        case ErrorKind::invalid_argument: return "invalid-argument";
        case ErrorKind::invalid_density: return "invalid-density";
        case ErrorKind::invalid_config: return "invalid-config";
        case ErrorKind::invalid_move: return "invalid-move";
        case ErrorKind::invalid_threshold: return "invalid-threshold";
        case ErrorKind::dimension_mismatch: return "dimension-mismatch";
        case ErrorKind::singular_fit: return "singular-fit";
        case ErrorKind::degenerate_data: return "degenerate-data";
        case ErrorKind::degenerate_overlap: return "degenerate-overlap";
        case ErrorKind::degenerate_regime: return "degenerate-regime";
        case ErrorKind::insufficient_samples: return "insufficient-samples";
        case ErrorKind::insufficient_data: return "insufficient-data";
        case ErrorKind::malformed_input: return "malformed-input";
        case ErrorKind::io_failure: return "io-failure";
    }
    return "unknown";
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t key) {
    return splitmix64(splitmix64(base) ^ (key * 0xd1b54a32d192ed03ULL + 0x8cb92ba72f3d8dd7ULL));
}

double Rng::uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double Rng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u, v, s;
    do {
        u = 2.0 * uniform() - 1.0;
        v = 2.0 * uniform() - 1.0;
        s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * m;
    has_spare_ = true;
    return u * m;
}

std::size_t Rng::below(std::size_t n) {
    if (n == 0) throw Error(ErrorKind::invalid_argument, "below(0)");
    std::uint64_t bound = n;
    std::uint64_t limit = ~std::uint64_t(0) - (~std::uint64_t(0) % bound);
    std::uint64_t x;
    do x = eng_(); while (x >= limit);
    return static_cast<std::size_t>(x % bound);
}

std::vector<std::size_t> Rng::permutation(std::size_t n) {
    std::vector<std::size_t> p(n);
    std::iota(p.begin(), p.end(), 0);
    shuffle(p);
    return p;
}

Rng Rng::split(std::uint64_t key) { return Rng(derive_seed(eng_(), key)); }

}  // namespace jstable
