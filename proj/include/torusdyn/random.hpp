// Deterministic random sampling. All randomized routines take an explicit
// seed and draw through these helpers, so identical seeds reproduce results
// byte for byte.
#pragma once

#include <cstdint>
#include <random>

#include "geometry.hpp"

namespace torusdyn {

inline constexpr std::uint64_t default_seed = 0x5DEECE66Dull;

class Rng {
public:
    explicit Rng(std::uint64_t seed = default_seed) : gen_(seed) {}

    // Uniform in [0,1) with 53 random bits; avoids the distribution classes
    // whose output sequences differ between standard libraries.
    double uniform01() { return double(gen_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    TorusPoint torus_point() { return {uniform01(), uniform01()}; }
    LiftPoint lift_point(double lo, double hi) { return {uniform(lo, hi), uniform(lo, hi)}; }

    // Area-uniform point of the torus-metric disk around `center`.
    TorusPoint disk_point(TorusPoint center, double radius) {
        double r = radius * std::sqrt(uniform01());
        double a = two_pi * uniform01();
        return wrap_point(center.x + r * std::cos(a), center.y + r * std::sin(a));
    }

    std::uint64_t bits() { return gen_(); }

private:
    std::mt19937_64 gen_;
};

} // namespace torusdyn
