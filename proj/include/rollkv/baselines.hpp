// Copyright (C) 2026 The rollkv authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rollkv/cache.hpp"
#include "rollkv/retention.hpp"

namespace rollkv {

enum class PolicyKind {
    Diversity,        // key-diversity scoring + TopK
    AttentionOracle,  // materialized attention weights (reference/oracle arm)
    Random,           // uniform random keep, seeded per (run, slot, event)
    Recency,          // sliding-window style: newest tokens win
};

PolicyKind policy_from_string(const std::string& s);
std::string to_string(PolicyKind p);

/// Importance of each candidate as the sum over the current frame's queries
/// of its softmax attention weight. The softmax normalizes over the slot's
/// full [anchor; candidates] context; this path deliberately materializes
/// the n_q x N weight matrix. Higher = keep. Throws on empty queries.
SlotScores attention_oracle_scores(const HeadCache& slot,
                                   std::span<const float> queries, std::size_t n_q,
                                   double scale);

/// Uniform random subset of min(budget, |candidates|) insert_seqs;
/// deterministic per seed (partial Fisher-Yates).
std::vector<std::uint64_t> random_keep(const std::vector<TokenEntry>& candidates,
                                       std::size_t budget, std::uint64_t seed);

/// The budget most recent candidates by insert_seq.
std::vector<std::uint64_t> recency_keep(const std::vector<TokenEntry>& candidates,
                                        std::size_t budget);

}  // namespace rollkv
