#pragma once

#include <cmath>
#include <cstdint>

namespace bsee {

//Counter-based Gaussian sampler.  Every draw is a pure function of
//(master_seed, path, counter): no state, no dependence on evaluation order,
//path count, or thread layout.

namespace detail {

inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

} // namespace detail

//Stream key for one path.
inline std::uint64_t path_key(std::uint64_t master_seed, std::uint64_t path) {
    return detail::mix64(master_seed ^ detail::mix64(path + 0x632BE59BD9B4E019ull));
}

//Uniform in (0,1), indexed by (key, counter).
inline double uniform01(std::uint64_t key, std::uint64_t counter) {
    std::uint64_t z = detail::mix64(key + 0x9E3779B97F4A7C15ull * (counter + 1));
    return (static_cast<double>(z >> 11) + 0.5) * (1.0 / 9007199254740992.0);
}

//Standard normal via Box-Muller; draw index `counter` consumes the uniform
//pair (2*counter, 2*counter+1) so distinct counters never share inputs.
inline double standard_normal(std::uint64_t key, std::uint64_t counter) {
    double u1 = uniform01(key, 2 * counter);
    double u2 = uniform01(key, 2 * counter + 1);
    double r = std::sqrt(-2.0 * std::log(u1));
    return r * std::cos(6.283185307179586476925286766559 * u2);
}

} // namespace bsee
