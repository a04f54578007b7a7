// Copyright (C) 2026 The rollkv authors
// SPDX-License-Identifier: Apache-2.0

#include "rollkv/cache.hpp"

#include <stdexcept>
#include <unordered_set>

namespace rollkv {

Tiebreak tiebreak_from_string(const std::string& s) {
    if (s == "recent-first") return Tiebreak::RecentFirst;
    if (s == "stable-index") return Tiebreak::StableIndex;
    throw std::invalid_argument("unknown tiebreak: " + s);
}

LayerAllocation layer_allocation_from_string(const std::string& s) {
    if (s == "adaptive") return LayerAllocation::Adaptive;
    if (s == "uniform") return LayerAllocation::Uniform;
    throw std::invalid_argument("unknown layer allocation: " + s);
}

std::string to_string(Tiebreak t) {
    return t == Tiebreak::RecentFirst ? "recent-first" : "stable-index";
}

std::string to_string(LayerAllocation a) {
    return a == LayerAllocation::Adaptive ? "adaptive" : "uniform";
}

void EngineConfig::validate() const {
    if (layers == 0 || heads == 0 || d_k == 0 || d_v == 0) {
        throw std::invalid_argument("engine dimensions must be positive");
    }
    if (b_init_per_head == 0) {
        throw std::invalid_argument("b_init_per_head must be positive");
    }
    if (!(tau > 0.0)) {
        throw std::invalid_argument("temperature must be positive");
    }
    if (anchor_frame_count == 0) {
        throw std::invalid_argument("anchor_frame_count must be positive");
    }
    if (prune_interval == 0) {
        throw std::invalid_argument("prune_interval must be positive");
    }
    if (t_block == 0) {
        throw std::invalid_argument("t_block must be positive");
    }
    if (min_head_budget != 0 && b_init_per_head < min_head_budget) {
        throw std::invalid_argument("b_init_per_head must be >= min_head_budget");
    }
}

CacheState::CacheState(EngineConfig config) : m_config(config) {
    m_config.validate();
    m_grid.resize(static_cast<std::size_t>(m_config.layers) * m_config.heads);
    for (std::uint32_t l = 0; l < m_config.layers; ++l) {
        for (std::uint32_t h = 0; h < m_config.heads; ++h) {
            HeadCache& slot = m_grid[static_cast<std::size_t>(l) * m_config.heads + h];
            slot.layer = l;
            slot.head = h;
        }
    }
}

void CacheState::append_frame(const FrameKV& frame) {
    if (frame.frame_id != m_frames_seen) {
        throw std::invalid_argument("non-causal append");
    }
    if (frame.layers != m_config.layers || frame.heads != m_config.heads ||
        frame.d_k != m_config.d_k || frame.d_v != m_config.d_v || frame.tokens == 0) {
        throw std::invalid_argument("frame dimension mismatch");
    }
    if (m_frames_seen == 0) {
        m_tokens_per_frame = frame.tokens;
    } else if (frame.tokens != m_tokens_per_frame) {
        throw std::invalid_argument("frame dimension mismatch");
    }
    const std::size_t expected_k =
        static_cast<std::size_t>(frame.layers) * frame.heads * frame.tokens * frame.d_k;
    const std::size_t expected_v =
        static_cast<std::size_t>(frame.layers) * frame.heads * frame.tokens * frame.d_v;
    if (frame.keys.size() != expected_k || frame.values.size() != expected_v) {
        throw std::invalid_argument("frame dimension mismatch");
    }

    const bool to_anchor =
        m_config.anchor_enabled && frame.frame_id < m_config.anchor_frame_count;
    for (std::uint32_t l = 0; l < m_config.layers; ++l) {
        for (std::uint32_t h = 0; h < m_config.heads; ++h) {
            HeadCache& slot = m_grid[static_cast<std::size_t>(l) * m_config.heads + h];
            const auto keys = frame.key_block(l, h);
            const auto values = frame.value_block(l, h);
            auto& dst = to_anchor ? slot.anchor : slot.candidates;
            dst.reserve(dst.size() + frame.tokens);
            for (std::uint32_t t = 0; t < frame.tokens; ++t) {
                TokenEntry entry;
                entry.key.assign(keys.begin() + static_cast<std::ptrdiff_t>(t) * frame.d_k,
                                 keys.begin() + static_cast<std::ptrdiff_t>(t + 1) * frame.d_k);
                entry.key_unit = normalize(entry.key);
                entry.value.assign(values.begin() + static_cast<std::ptrdiff_t>(t) * frame.d_v,
                                   values.begin() + static_cast<std::ptrdiff_t>(t + 1) * frame.d_v);
                entry.frame_id = frame.frame_id;
                entry.token_idx = t;
                entry.insert_seq = m_next_seq++;
                dst.push_back(std::move(entry));
            }
        }
    }
    ++m_frames_seen;
}

EvictionReport CacheState::apply_retention(const KeepSets& keep) {
    if (keep.size() != m_grid.size()) {
        throw std::invalid_argument("keep sets must cover every slot");
    }
    // Validate everything before mutating any slot so readers never observe
    // a partially applied eviction alongside an exception.
    for (std::size_t s = 0; s < m_grid.size(); ++s) {
        const HeadCache& slot = m_grid[s];
        std::unordered_set<std::uint64_t> want(keep[s].begin(), keep[s].end());
        std::size_t matched = 0;
        for (const TokenEntry& e : slot.candidates) {
            matched += want.count(e.insert_seq);
        }
        if (matched != want.size()) {
            throw std::invalid_argument("illegal eviction target");
        }
    }

    EvictionReport report;
    report.slots.resize(m_grid.size());
    for (std::size_t s = 0; s < m_grid.size(); ++s) {
        HeadCache& slot = m_grid[s];
        report.slots[s].layer = slot.layer;
        report.slots[s].head = slot.head;
        std::unordered_set<std::uint64_t> want(keep[s].begin(), keep[s].end());
        std::vector<TokenEntry> kept;
        kept.reserve(want.size());
        for (TokenEntry& e : slot.candidates) {
            if (want.count(e.insert_seq)) {
                kept.push_back(std::move(e));
            } else {
                report.slots[s].evicted.emplace_back(e.frame_id, e.token_idx);
                ++report.total_evicted;
            }
        }
        slot.candidates = std::move(kept);
    }
    return report;
}

std::vector<SlotCounts> CacheState::snapshot_counts() const {
    std::vector<SlotCounts> counts(m_grid.size());
    for (std::size_t s = 0; s < m_grid.size(); ++s) {
        counts[s].layer = m_grid[s].layer;
        counts[s].head = m_grid[s].head;
        counts[s].anchor_count = m_grid[s].anchor.size();
        counts[s].candidate_count = m_grid[s].candidates.size();
    }
    return counts;
}

const HeadCache& CacheState::slot(std::uint32_t l, std::uint32_t h) const {
    return m_grid.at(static_cast<std::size_t>(l) * m_config.heads + h);
}

HeadCache& CacheState::slot_mut(std::uint32_t l, std::uint32_t h) {
    return m_grid.at(static_cast<std::size_t>(l) * m_config.heads + h);
}

std::uint64_t CacheState::resident_tokens() const {
    std::uint64_t total = 0;
    for (const HeadCache& slot : m_grid) {
        total += slot.anchor.size() + slot.candidates.size();
    }
    return total;
}

}  // namespace rollkv
