// Copyright (C) 2026 The rollkv authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace rollkv {

/// Storage is 32-bit floats; every accumulation (dot products, softmax sums,
/// online-softmax running statistics) runs in 64-bit.
using Vec32 = std::vector<float>;

/// Dot product with 64-bit accumulation.
double dot(std::span<const float> a, std::span<const float> b);

/// Euclidean norm, accumulated in 64-bit.
double l2_norm(std::span<const float> v);

/// Returns v / ||v||2. Inputs with ||v||2 < 1e-12 map to the all-zero
/// sentinel vector (degenerate tokens are scored as maximally redundant
/// downstream instead of aborting a stream). Throws on non-finite input.
Vec32 normalize(std::span<const float> v);

/// True when every element is zero (the sentinel produced by normalize).
bool is_zero_sentinel(std::span<const float> v);

/// Cosine similarity clamped to [-1, 1]; 0 when either norm is < 1e-12.
/// Throws on length mismatch.
double cos_sim(std::span<const float> a, std::span<const float> b);

/// Numerically stable softmax of scores / temperature. Output sums to 1
/// within 1e-9 and preserves the input ordering. Throws on empty input or
/// temperature <= 0.
std::vector<double> softmax(std::span<const double> scores, double temperature);

/// Row-major softmax attention weights for n_q queries over n_kv keys:
/// w[q*n_kv + j] = softmax_j(scale * q . k_j). Materializes the full
/// n_q x n_kv matrix; reference/oracle paths only.
std::vector<double> attention_weights(std::span<const float> queries, std::size_t n_q,
                                      std::size_t d_k,
                                      std::span<const float> keys, std::size_t n_kv,
                                      double scale);

/// Reference attention: out[q] = sum_j softmax_j(scale * q . k_j) v_j.
/// Materializes the full weight matrix. Throws "empty context" on n_kv = 0.
Vec32 attend_naive(std::span<const float> queries, std::size_t n_q, std::size_t d_k,
                   std::span<const float> keys, std::span<const float> values,
                   std::size_t n_kv, std::size_t d_v, double scale);

/// Scratch accounting for the streaming path, in elements (floats/doubles
/// both count as one element). peak covers everything the computation keeps
/// alive at once beyond its inputs: per-tile score buffer, running max/sum,
/// and the output accumulator.
struct AttendStats {
    std::uint64_t peak_transient_elements = 0;
    std::uint64_t tiles = 0;
};

/// Online-softmax attention accumulator. Tiles of keys/values are pushed in
/// stream order; a running max and normalizer per query row make the result
/// independent of the tiling within fp tolerance. Nothing proportional to
/// the total context length is ever allocated.
class OnlineAttention {
public:
    OnlineAttention(std::size_t n_q, std::size_t d_k, std::size_t d_v, double scale);

    /// Fold one tile of rows (keys: rows x d_k, values: rows x d_v).
    void add_tile(std::span<const float> queries,
                  std::span<const float> keys_tile,
                  std::span<const float> values_tile,
                  std::size_t rows);

    /// Normalized outputs, n_q x d_v. Throws "empty context" when no rows
    /// were pushed.
    Vec32 finish() const;

    std::uint64_t rows_seen() const { return m_rows_seen; }
    AttendStats stats() const;

private:
    std::size_t m_n_q;
    std::size_t m_d_k;
    std::size_t m_d_v;
    double m_scale;
    std::vector<double> m_run_max;   // per query row
    std::vector<double> m_run_sum;   // per query row
    std::vector<double> m_acc;       // n_q x d_v
    std::vector<double> m_scores;    // per-tile scratch, n_q x tile rows
    std::uint64_t m_rows_seen = 0;
    std::uint64_t m_peak_scores = 0;
    std::uint64_t m_tiles = 0;
};

/// Streaming attention over contiguous key/value matrices, processed in
/// tiles of at most t_block rows. Matches attend_naive within 1e-5 relative
/// error; peak transient storage is O(n_q * t_block), never O(n_q * n_kv).
Vec32 attend_streaming(std::span<const float> queries, std::size_t n_q, std::size_t d_k,
                       std::span<const float> keys, std::span<const float> values,
                       std::size_t n_kv, std::size_t d_v, double scale,
                       std::size_t t_block, AttendStats* stats = nullptr);

}  // namespace rollkv
