// Copyright (C) 2026 The rollkv authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace rollkv {

/// splitmix64 step; used to derive independent substream seeds from
/// (seed, layer, head, ...) tuples.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline std::uint64_t mix64(std::uint64_t a, std::uint64_t b) {
    return mix64(mix64(a) ^ b);
}

inline std::uint64_t mix64(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    return mix64(mix64(a, b) ^ c);
}

/// mt19937_64 core with hand-rolled distributions. The standard pins the
/// mt19937_64 sequence but not the library distributions, so uniform,
/// gaussian and bounded draws are implemented here to keep generated
/// streams identical across toolchains.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : m_engine(seed) {}

    std::uint64_t next_u64() { return m_engine(); }

    /// Uniform in [0, 1) with 53-bit resolution.
    double uniform() {
        return static_cast<double>(m_engine() >> 11) * 0x1.0p-53;
    }

    /// Uniform integer in [0, n). Rejection sampling, unbiased.
    std::uint64_t bounded(std::uint64_t n) {
        const std::uint64_t threshold = (0 - n) % n;
        for (;;) {
            const std::uint64_t r = m_engine();
            if (r >= threshold) {
                return r % n;
            }
        }
    }

    /// Standard normal via Box-Muller (pairs cached).
    double gaussian() {
        if (m_have_spare) {
            m_have_spare = false;
            return m_spare;
        }
        double u1 = uniform();
        while (u1 <= 0.0) {
            u1 = uniform();
        }
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * M_PI * u2;
        m_spare = r * std::sin(theta);
        m_have_spare = true;
        return r * std::cos(theta);
    }

    std::vector<double> gaussian_vec(std::size_t n) {
        std::vector<double> v(n);
        for (double& x : v) {
            x = gaussian();
        }
        return v;
    }

    /// Uniformly random unit vector (gaussian direction, normalized).
    std::vector<double> unit_vec(std::size_t n) {
        for (;;) {
            std::vector<double> v = gaussian_vec(n);
            double norm = 0.0;
            for (double x : v) {
                norm += x * x;
            }
            norm = std::sqrt(norm);
            if (norm > 1e-12) {
                for (double& x : v) {
                    x /= norm;
                }
                return v;
            }
        }
    }

    /// Index draw from weights (need not be normalized); CDF inversion.
    std::size_t weighted(std::span<const double> weights) {
        double total = 0.0;
        for (double w : weights) {
            total += w;
        }
        const double u = uniform() * total;
        double acc = 0.0;
        for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
            acc += weights[i];
            if (u < acc) {
                return i;
            }
        }
        return weights.empty() ? 0 : weights.size() - 1;
    }

private:
    std::mt19937_64 m_engine;
    double m_spare = 0.0;
    bool m_have_spare = false;
};

}  // namespace rollkv
