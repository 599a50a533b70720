#include "prism/rng.hpp"

#include <cmath>
#include <numbers>

namespace prism {

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

Rng Rng::fork(std::uint64_t tag, std::uint64_t index) const {
    std::mt19937_64 probe = gen_;  // copy; does not advance this stream
    const std::uint64_t base = probe();
    return Rng(mix64(base ^ mix64(tag) ^ mix64(index * 0x9e3779b97f4a7c15ULL + 1)));
}

double Rng::uniform() {
    // top 53 bits -> [0, 1)
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
}

double Rng::phase() {
    return (2.0 * uniform() - 1.0) * std::numbers::pi;
}

double Rng::normal() {
    if (have_spare_) {
        have_spare_ = false;
        return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double th = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(th);
    have_spare_ = true;
    return r * std::cos(th);
}

cplx Rng::cnormal() {
    constexpr double half = 0.5;
    return {normal() * std::sqrt(half), normal() * std::sqrt(half)};
}

}  // namespace prism
