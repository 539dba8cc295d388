#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace htrail::rng {

// 64-bit FNV-1a; used to fold string ids into stream seeds.
std::uint64_t hash_string(std::string_view s);

// splitmix64-style combiner, order-sensitive.
std::uint64_t mix(std::uint64_t a, std::uint64_t b);

// Seeded random stream with portable value mappings. mt19937_64 output is
// standardized bit-exact, and the uniform/normal mappings below avoid the
// implementation-defined std distributions, so sequences are reproducible
// across platforms.
class Stream {
public:
    explicit Stream(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t bits() { return gen_(); }

    // [0, 1), 53-bit resolution
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // integer in [0, n), unbiased rejection sampling
    std::uint64_t below(std::uint64_t n);

    // standard normal via Box-Muller
    double normal();

private:
    std::mt19937_64 gen_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

// In-place Fisher-Yates; deterministic given the stream state.
template <typename T>
void shuffle(std::vector<T>& v, Stream& s) {
    for (std::size_t i = v.size(); i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(s.below(i));
        std::swap(v[i - 1], v[j]);
    }
}

}  // namespace htrail::rng
