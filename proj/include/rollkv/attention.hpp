// Copyright (C) 2026 The rollkv authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "rollkv/cache.hpp"
#include "rollkv/frame.hpp"
#include "rollkv/numerics.hpp"

namespace rollkv {

/// Per-slot attention outputs (P x d_v) for one frame; the quality
/// observable for eviction experiments.
struct FrameOutputs {
    std::uint32_t frame_id = 0;
    std::uint32_t layers = 0;
    std::uint32_t heads = 0;
    std::uint32_t tokens = 0;
    std::uint32_t d_v = 0;
    std::vector<float> outputs;  // layers*heads*tokens*d_v

    std::span<const float> block(std::uint32_t l, std::uint32_t h) const {
        const std::size_t n = static_cast<std::size_t>(tokens) * d_v;
        return {outputs.data() + (static_cast<std::size_t>(l) * heads + h) * n, n};
    }
};

enum class AttendMode {
    Streaming,  // tiled online softmax, t_block rows at a time
    Naive,      // reference path, materializes the weight matrix
};

/// Attention of the frame's queries over each slot's [anchor; candidates]
/// context, with scale 1/sqrt(d_k). Read-only on the cache; throws
/// "no context" when a slot is empty. In streaming mode no buffer
/// proportional to the context length is allocated; stats (optional)
/// accumulates peak transient element counts across slots.
FrameOutputs forward_frame(const CacheState& cache, const FrameQueries& queries,
                           AttendMode mode, AttendStats* stats = nullptr);

/// Relative output error: per slot ||pruned - full||_F / max(||full||_F,
/// 1e-12), averaged over slots. Throws on shape mismatch.
double fidelity_error(const FrameOutputs& pruned, const FrameOutputs& full);

}  // namespace rollkv
