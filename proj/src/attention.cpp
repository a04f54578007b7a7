// Copyright (C) 2026 The rollkv authors
// SPDX-License-Identifier: Apache-2.0

#include "rollkv/attention.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rollkv {

namespace {

/// Packs [anchor; candidates] rows into tiles and feeds the online-softmax
/// accumulator. The pack buffers are the only per-slot scratch proportional
/// to the tile size.
Vec32 attend_slot_streaming(const HeadCache& slot, std::span<const float> queries,
                            std::size_t n_q, std::size_t d_k, std::size_t d_v,
                            double scale, std::size_t t_block, AttendStats* stats) {
    OnlineAttention attn(n_q, d_k, d_v, scale);
    std::vector<float> k_tile(t_block * d_k);
    std::vector<float> v_tile(t_block * d_v);
    std::size_t rows = 0;
    auto flush = [&]() {
        if (rows > 0) {
            attn.add_tile(queries, {k_tile.data(), rows * d_k},
                          {v_tile.data(), rows * d_v}, rows);
            rows = 0;
        }
    };
    for (const auto* segment : {&slot.anchor, &slot.candidates}) {
        for (const TokenEntry& e : *segment) {
            std::copy(e.key.begin(), e.key.end(), k_tile.begin() + rows * d_k);
            std::copy(e.value.begin(), e.value.end(), v_tile.begin() + rows * d_v);
            if (++rows == t_block) {
                flush();
            }
        }
    }
    flush();
    Vec32 out = attn.finish();
    if (stats != nullptr) {
        AttendStats s = attn.stats();
        s.peak_transient_elements += k_tile.size() + v_tile.size();
        stats->peak_transient_elements =
            std::max(stats->peak_transient_elements, s.peak_transient_elements);
        stats->tiles += s.tiles;
    }
    return out;
}

Vec32 attend_slot_naive(const HeadCache& slot, std::span<const float> queries,
                        std::size_t n_q, std::size_t d_k, std::size_t d_v,
                        double scale) {
    const std::size_t n_kv = slot.anchor.size() + slot.candidates.size();
    std::vector<float> keys(n_kv * d_k);
    std::vector<float> values(n_kv * d_v);
    std::size_t row = 0;
    for (const auto* segment : {&slot.anchor, &slot.candidates}) {
        for (const TokenEntry& e : *segment) {
            std::copy(e.key.begin(), e.key.end(), keys.begin() + row * d_k);
            std::copy(e.value.begin(), e.value.end(), values.begin() + row * d_v);
            ++row;
        }
    }
    return attend_naive(queries, n_q, d_k, keys, values, n_kv, d_v, scale);
}

}  // namespace

FrameOutputs forward_frame(const CacheState& cache, const FrameQueries& queries,
                           AttendMode mode, AttendStats* stats) {
    const EngineConfig& cfg = cache.config();
    if (queries.layers != cfg.layers || queries.heads != cfg.heads ||
        queries.d_k != cfg.d_k || queries.tokens == 0) {
        throw std::invalid_argument("query dimension mismatch");
    }
    const std::size_t n_q = queries.tokens;
    const double scale = 1.0 / std::sqrt(static_cast<double>(cfg.d_k));

    FrameOutputs out;
    out.frame_id = queries.frame_id;
    out.layers = cfg.layers;
    out.heads = cfg.heads;
    out.tokens = queries.tokens;
    out.d_v = cfg.d_v;
    out.outputs.resize(static_cast<std::size_t>(cfg.layers) * cfg.heads * n_q * cfg.d_v);

    for (std::uint32_t l = 0; l < cfg.layers; ++l) {
        for (std::uint32_t h = 0; h < cfg.heads; ++h) {
            const HeadCache& slot = cache.slot(l, h);
            if (slot.anchor.empty() && slot.candidates.empty()) {
                throw std::invalid_argument("no context");
            }
            const auto qblock = queries.query_block(l, h);
            Vec32 slot_out;
            if (mode == AttendMode::Streaming) {
                slot_out = attend_slot_streaming(slot, qblock, n_q, cfg.d_k, cfg.d_v,
                                                 scale, cfg.t_block, stats);
            } else {
                slot_out = attend_slot_naive(slot, qblock, n_q, cfg.d_k, cfg.d_v, scale);
            }
            std::copy(slot_out.begin(), slot_out.end(),
                      out.outputs.begin() +
                          (static_cast<std::size_t>(l) * cfg.heads + h) * n_q * cfg.d_v);
        }
    }
    return out;
}

double fidelity_error(const FrameOutputs& pruned, const FrameOutputs& full) {
    if (pruned.layers != full.layers || pruned.heads != full.heads ||
        pruned.tokens != full.tokens || pruned.d_v != full.d_v ||
        pruned.outputs.size() != full.outputs.size()) {
        throw std::invalid_argument("output shape mismatch");
    }
    const std::size_t block = static_cast<std::size_t>(pruned.tokens) * pruned.d_v;
    const std::size_t slots = static_cast<std::size_t>(pruned.layers) * pruned.heads;
    double total = 0.0;
    for (std::size_t s = 0; s < slots; ++s) {
        double diff2 = 0.0;
        double ref2 = 0.0;
        for (std::size_t i = 0; i < block; ++i) {
            const double p = pruned.outputs[s * block + i];
            const double f = full.outputs[s * block + i];
            diff2 += (p - f) * (p - f);
            ref2 += f * f;
        }
        total += std::sqrt(diff2) / std::max(std::sqrt(ref2), 1e-12);
    }
    return total / static_cast<double>(slots);
}

}  // namespace rollkv
