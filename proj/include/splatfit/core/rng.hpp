#pragma once

#include "splatfit/core/linalg.hpp"

#include <cstdint>
#include <random>

namespace splatfit {

// All randomness in the library flows through seeded Rng instances so runs
// are reproducible bit-for-bit on a given build.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    double uniform(double lo = 0.0, double hi = 1.0) {
        return std::uniform_real_distribution<double>(lo, hi)(gen_);
    }

    double normal(double mean = 0.0, double stddev = 1.0) {
        return std::normal_distribution<double>(mean, stddev)(gen_);
    }

    // Uniform integer in [0, n).
    std::uint64_t index(std::uint64_t n) {
        return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(gen_);
    }

    Vec3 normal_vec3(double stddev = 1.0) {
        return Vec3(normal(0.0, stddev), normal(0.0, stddev), normal(0.0, stddev));
    }

    std::mt19937_64& engine() { return gen_; }

private:
    std::mt19937_64 gen_;
};

}  // namespace splatfit
