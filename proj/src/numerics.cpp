// Copyright (C) 2026 The rollkv authors
// SPDX-License-Identifier: Apache-2.0

#include "rollkv/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace rollkv {

namespace {
constexpr double kNormEps = 1e-12;
}

double dot(std::span<const float> a, std::span<const float> b) {
    if (a.size() != b.size()) {
        throw std::invalid_argument("vector length mismatch");
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    }
    return acc;
}

double l2_norm(std::span<const float> v) {
    double acc = 0.0;
    for (float x : v) {
        acc += static_cast<double>(x) * static_cast<double>(x);
    }
    return std::sqrt(acc);
}

Vec32 normalize(std::span<const float> v) {
    for (float x : v) {
        if (!std::isfinite(x)) {
            throw std::invalid_argument("non-finite vector");
        }
    }
    const double norm = l2_norm(v);
    Vec32 out(v.size(), 0.0f);
    if (norm < kNormEps) {
        return out;  // zero sentinel
    }
    const double inv = 1.0 / norm;
    for (std::size_t i = 0; i < v.size(); ++i) {
        out[i] = static_cast<float>(static_cast<double>(v[i]) * inv);
    }
    return out;
}

bool is_zero_sentinel(std::span<const float> v) {
    return std::all_of(v.begin(), v.end(), [](float x) { return x == 0.0f; });
}

double cos_sim(std::span<const float> a, std::span<const float> b) {
    if (a.size() != b.size()) {
        throw std::invalid_argument("vector length mismatch");
    }
    const double na = l2_norm(a);
    const double nb = l2_norm(b);
    if (na < kNormEps || nb < kNormEps) {
        return 0.0;
    }
    const double c = dot(a, b) / (na * nb);
    return std::clamp(c, -1.0, 1.0);
}

std::vector<double> softmax(std::span<const double> scores, double temperature) {
    if (scores.empty()) {
        throw std::invalid_argument("empty scores");
    }
    if (!(temperature > 0.0)) {
        throw std::invalid_argument("temperature must be positive");
    }
    double max_s = -std::numeric_limits<double>::infinity();
    for (double s : scores) {
        if (!std::isfinite(s)) {
            throw std::invalid_argument("non-finite score");
        }
        max_s = std::max(max_s, s);
    }
    std::vector<double> out(scores.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        out[i] = std::exp((scores[i] - max_s) / temperature);
        sum += out[i];
    }
    const double inv = 1.0 / sum;
    for (double& p : out) {
        p *= inv;
    }
    return out;
}

std::vector<double> attention_weights(std::span<const float> queries, std::size_t n_q,
                                      std::size_t d_k,
                                      std::span<const float> keys, std::size_t n_kv,
                                      double scale) {
    if (n_kv == 0) {
        throw std::invalid_argument("empty context");
    }
    std::vector<double> weights(n_q * n_kv);
    for (std::size_t q = 0; q < n_q; ++q) {
        const auto qrow = queries.subspan(q * d_k, d_k);
        double* wrow = weights.data() + q * n_kv;
        double max_s = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < n_kv; ++j) {
            wrow[j] = scale * dot(qrow, keys.subspan(j * d_k, d_k));
            max_s = std::max(max_s, wrow[j]);
        }
        double sum = 0.0;
        for (std::size_t j = 0; j < n_kv; ++j) {
            wrow[j] = std::exp(wrow[j] - max_s);
            sum += wrow[j];
        }
        const double inv = 1.0 / sum;
        for (std::size_t j = 0; j < n_kv; ++j) {
            wrow[j] *= inv;
        }
    }
    return weights;
}

Vec32 attend_naive(std::span<const float> queries, std::size_t n_q, std::size_t d_k,
                   std::span<const float> keys, std::span<const float> values,
                   std::size_t n_kv, std::size_t d_v, double scale) {
    if (n_kv == 0) {
        throw std::invalid_argument("empty context");
    }
    // Unnormalized exp weights plus a final divide, so that a single-tile
    // streaming pass reproduces this bit-for-bit.
    std::vector<double> weights(n_q * n_kv);
    Vec32 out(n_q * d_v, 0.0f);
    for (std::size_t q = 0; q < n_q; ++q) {
        const auto qrow = queries.subspan(q * d_k, d_k);
        double* wrow = weights.data() + q * n_kv;
        double max_s = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < n_kv; ++j) {
            wrow[j] = scale * dot(qrow, keys.subspan(j * d_k, d_k));
            max_s = std::max(max_s, wrow[j]);
        }
        double sum = 0.0;
        for (std::size_t j = 0; j < n_kv; ++j) {
            wrow[j] = std::exp(wrow[j] - max_s);
            sum += wrow[j];
        }
        std::vector<double> acc(d_v, 0.0);
        for (std::size_t j = 0; j < n_kv; ++j) {
            const float* vrow = values.data() + j * d_v;
            for (std::size_t c = 0; c < d_v; ++c) {
                acc[c] += wrow[j] * static_cast<double>(vrow[c]);
            }
        }
        for (std::size_t c = 0; c < d_v; ++c) {
            out[q * d_v + c] = static_cast<float>(acc[c] / sum);
        }
    }
    return out;
}

OnlineAttention::OnlineAttention(std::size_t n_q, std::size_t d_k, std::size_t d_v,
                                 double scale)
    : m_n_q(n_q),
      m_d_k(d_k),
      m_d_v(d_v),
      m_scale(scale),
      m_run_max(n_q, -std::numeric_limits<double>::infinity()),
      m_run_sum(n_q, 0.0),
      m_acc(n_q * d_v, 0.0) {}

void OnlineAttention::add_tile(std::span<const float> queries,
                               std::span<const float> keys_tile,
                               std::span<const float> values_tile,
                               std::size_t rows) {
    if (rows == 0) {
        return;
    }
    m_scores.resize(m_n_q * rows);
    m_peak_scores = std::max<std::uint64_t>(m_peak_scores, m_scores.size());
    ++m_tiles;
    for (std::size_t q = 0; q < m_n_q; ++q) {
        const auto qrow = queries.subspan(q * m_d_k, m_d_k);
        double* srow = m_scores.data() + q * rows;
        double tile_max = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < rows; ++j) {
            srow[j] = m_scale * dot(qrow, keys_tile.subspan(j * m_d_k, m_d_k));
            tile_max = std::max(tile_max, srow[j]);
        }
        const double new_max = std::max(m_run_max[q], tile_max);
        const double carry = (m_run_sum[q] == 0.0) ? 0.0 : std::exp(m_run_max[q] - new_max);
        m_run_sum[q] *= carry;
        double* arow = m_acc.data() + q * m_d_v;
        if (carry != 1.0) {
            for (std::size_t c = 0; c < m_d_v; ++c) {
                arow[c] *= carry;
            }
        }
        for (std::size_t j = 0; j < rows; ++j) {
            const double w = std::exp(srow[j] - new_max);
            m_run_sum[q] += w;
            const float* vrow = values_tile.data() + j * m_d_v;
            for (std::size_t c = 0; c < m_d_v; ++c) {
                arow[c] += w * static_cast<double>(vrow[c]);
            }
        }
        m_run_max[q] = new_max;
    }
    m_rows_seen += rows;
}

Vec32 OnlineAttention::finish() const {
    if (m_rows_seen == 0) {
        throw std::invalid_argument("empty context");
    }
    Vec32 out(m_n_q * m_d_v);
    for (std::size_t q = 0; q < m_n_q; ++q) {
        for (std::size_t c = 0; c < m_d_v; ++c) {
            out[q * m_d_v + c] = static_cast<float>(m_acc[q * m_d_v + c] / m_run_sum[q]);
        }
    }
    return out;
}

AttendStats OnlineAttention::stats() const {
    AttendStats s;
    s.peak_transient_elements =
        m_peak_scores + m_run_max.size() + m_run_sum.size() + m_acc.size();
    s.tiles = m_tiles;
    return s;
}

Vec32 attend_streaming(std::span<const float> queries, std::size_t n_q, std::size_t d_k,
                       std::span<const float> keys, std::span<const float> values,
                       std::size_t n_kv, std::size_t d_v, double scale,
                       std::size_t t_block, AttendStats* stats) {
    if (n_kv == 0) {
        throw std::invalid_argument("empty context");
    }
    if (t_block == 0) {
        throw std::invalid_argument("t_block must be positive");
    }
    OnlineAttention attn(n_q, d_k, d_v, scale);
    for (std::size_t start = 0; start < n_kv; start += t_block) {
        const std::size_t rows = std::min(t_block, n_kv - start);
        attn.add_tile(queries, keys.subspan(start * d_k, rows * d_k),
                      values.subspan(start * d_v, rows * d_v), rows);
    }
    Vec32 out = attn.finish();
    if (stats != nullptr) {
        *stats = attn.stats();
    }
    return out;
}

}  // namespace rollkv
