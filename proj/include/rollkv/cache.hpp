// Copyright (C) 2026 The rollkv authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rollkv/frame.hpp"
#include "rollkv/numerics.hpp"

namespace rollkv {

enum class Tiebreak {
    RecentFirst,  // equal scores: larger insert_seq wins
    StableIndex,  // equal scores: smaller insert_seq wins
};

enum class LayerAllocation {
    Adaptive,  // softmax over per-layer mean diversity
    Uniform,   // 1/L per layer
};

Tiebreak tiebreak_from_string(const std::string& s);
LayerAllocation layer_allocation_from_string(const std::string& s);
std::string to_string(Tiebreak t);
std::string to_string(LayerAllocation a);

struct EngineConfig {
    std::uint32_t layers = 4;
    std::uint32_t heads = 2;
    std::uint32_t d_k = 32;
    std::uint32_t d_v = 32;
    std::uint32_t b_init_per_head = 256;  // candidate token budget per head
    double tau = 1.0;                     // layer-allocation softmax temperature
    std::uint32_t anchor_frame_count = 1;
    std::uint32_t prune_interval = 1;     // frames between prune events
    std::uint32_t min_head_budget = 0;    // 0 = derive to tokens-per-frame at run start
    Tiebreak tiebreak = Tiebreak::RecentFirst;
    LayerAllocation layer_allocation = LayerAllocation::Adaptive;
    bool anchor_enabled = true;
    bool freeze_after_first = false;  // keep the first prune event's budget plan
    std::uint32_t t_block = 512;      // streaming attention tile rows

    /// Throws std::invalid_argument when any invariant is violated.
    void validate() const;
};

/// One cached key/value pair with provenance. key_unit caches
/// normalize(key); keys are immutable after insertion.
struct TokenEntry {
    Vec32 key;
    Vec32 key_unit;
    Vec32 value;
    std::uint32_t frame_id = 0;
    std::uint32_t token_idx = 0;
    std::uint64_t insert_seq = 0;
};

/// Anchor segment plus mutable candidate segment for one (layer, head) slot.
/// Anchor entries come from frames with frame_id < anchor_frame_count and
/// are never touched by retention.
struct HeadCache {
    std::uint32_t layer = 0;
    std::uint32_t head = 0;
    std::vector<TokenEntry> anchor;
    std::vector<TokenEntry> candidates;
};

struct SlotCounts {
    std::uint32_t layer = 0;
    std::uint32_t head = 0;
    std::uint64_t anchor_count = 0;
    std::uint64_t candidate_count = 0;
};

struct SlotEvictions {
    std::uint32_t layer = 0;
    std::uint32_t head = 0;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> evicted;  // (frame_id, token_idx)
};

struct EvictionReport {
    std::vector<SlotEvictions> slots;
    std::uint64_t total_evicted = 0;
};

/// Keep sets, slot-major (layer*heads + head): insert_seq values of the
/// candidates that survive a prune event.
using KeepSets = std::vector<std::vector<std::uint64_t>>;

/// The rolling store. Single logical writer; readers see either the
/// pre-prune or post-prune state of a slot, never a partial eviction.
class CacheState {
public:
    explicit CacheState(EngineConfig config);

    /// Appends one frame's tokens to every slot. Frames must arrive in
    /// order (frame_id == frames_seen); the first anchor_frame_count frames
    /// land in the anchor segment when anchors are enabled.
    void append_frame(const FrameKV& frame);

    /// Filters each slot's candidates down to the given keep set, preserving
    /// relative order. Anchors are untouched; naming an anchor or unknown
    /// insert_seq throws "illegal eviction target".
    EvictionReport apply_retention(const KeepSets& keep);

    std::vector<SlotCounts> snapshot_counts() const;

    const HeadCache& slot(std::uint32_t l, std::uint32_t h) const;
    HeadCache& slot_mut(std::uint32_t l, std::uint32_t h);

    std::uint32_t frames_seen() const { return m_frames_seen; }
    std::uint32_t tokens_per_frame() const { return m_tokens_per_frame; }
    const EngineConfig& config() const { return m_config; }
    std::uint64_t resident_tokens() const;
    std::size_t slot_count() const { return m_grid.size(); }

private:
    EngineConfig m_config;
    std::vector<HeadCache> m_grid;  // layers*heads, slot-major
    std::uint32_t m_frames_seen = 0;
    std::uint32_t m_tokens_per_frame = 0;  // fixed by the first frame
    std::uint64_t m_next_seq = 0;
};

}  // namespace rollkv
