// Copyright (C) 2026 The rollkv authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace rollkv {

/// One frame's worth of keys and values for every (layer, head) slot.
/// Blocks are stored slot-major: [layer][head][token][dim].
struct FrameKV {
    std::uint32_t frame_id = 0;
    std::uint32_t layers = 0;
    std::uint32_t heads = 0;
    std::uint32_t tokens = 0;  // tokens per frame, P
    std::uint32_t d_k = 0;
    std::uint32_t d_v = 0;
    std::vector<float> keys;    // layers*heads*tokens*d_k
    std::vector<float> values;  // layers*heads*tokens*d_v

    std::span<const float> key_block(std::uint32_t l, std::uint32_t h) const {
        const std::size_t block = static_cast<std::size_t>(tokens) * d_k;
        return {keys.data() + (static_cast<std::size_t>(l) * heads + h) * block, block};
    }
    std::span<const float> value_block(std::uint32_t l, std::uint32_t h) const {
        const std::size_t block = static_cast<std::size_t>(tokens) * d_v;
        return {values.data() + (static_cast<std::size_t>(l) * heads + h) * block, block};
    }
};

/// Per-slot query matrices (P x d_k) for one frame.
struct FrameQueries {
    std::uint32_t frame_id = 0;
    std::uint32_t layers = 0;
    std::uint32_t heads = 0;
    std::uint32_t tokens = 0;
    std::uint32_t d_k = 0;
    std::vector<float> queries;  // layers*heads*tokens*d_k

    std::span<const float> query_block(std::uint32_t l, std::uint32_t h) const {
        const std::size_t block = static_cast<std::size_t>(tokens) * d_k;
        return {queries.data() + (static_cast<std::size_t>(l) * heads + h) * block, block};
    }
};

struct FramePair {
    FrameKV kv;
    FrameQueries queries;
};

}  // namespace rollkv
