// Copyright (C) 2026 The rollkv authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "rollkv/cache.hpp"

namespace rollkv {

/// Per-slot scores, one entry per current candidate token (higher = keep).
/// For the key-diversity policy, score = -cos(mean_key, key_unit) and
/// mean_key holds the (non-renormalized) mean of normalized keys; other
/// policies reuse the container and leave mean_key empty.
struct SlotScores {
    std::uint32_t layer = 0;
    std::uint32_t head = 0;
    std::vector<std::pair<std::uint64_t, double>> scores;  // (insert_seq, score)
    Vec32 mean_key;
};

/// Arithmetic mean of the candidates' normalized keys. Not renormalized:
/// downstream cosine similarity is scale-invariant and the reference vector
/// is a plain expectation. Throws "no candidates" on an empty set.
Vec32 mean_key(const std::vector<TokenEntry>& candidates);

/// Negative cosine similarity of each candidate's normalized key to mu.
/// Zero-sentinel keys (degenerate tokens) are forced to -1 so they are
/// evicted first.
SlotScores diversity_scores(const std::vector<TokenEntry>& candidates,
                            std::span<const float> mu,
                            std::uint32_t layer, std::uint32_t head);

/// Convenience: mean_key + diversity_scores over a slot's candidates.
SlotScores diversity_scores(const HeadCache& slot);

/// The budget highest-scoring insert_seqs. Ties: RecentFirst keeps the
/// larger insert_seq, StableIndex the smaller. Everything is kept when the
/// budget covers the candidate count.
std::vector<std::uint64_t> select_topk(const SlotScores& scores, std::size_t budget,
                                       Tiebreak tiebreak);

/// Mean score of a slot; throws on empty scores.
double slot_mean_diversity(const SlotScores& scores);

}  // namespace rollkv
