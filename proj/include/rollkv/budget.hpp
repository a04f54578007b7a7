// Copyright (C) 2026 The rollkv authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "rollkv/cache.hpp"

namespace rollkv {

/// A per-layer / per-head candidate budget split of the total token budget
/// b_init_per_head * layers * heads.
struct BudgetPlan {
    std::vector<double> layer_share;             // softmax shares, sums to 1
    std::vector<std::uint64_t> layer_budget_raw;  // pre-floor integer split
    std::vector<std::uint64_t> layer_budget;      // post-floor row sums of head_budget
    std::vector<std::vector<std::uint64_t>> head_budget;  // layers x heads
    std::uint64_t total_budget = 0;
    double tau = 1.0;

    std::uint64_t head(std::uint32_t l, std::uint32_t h) const { return head_budget[l][h]; }
    std::uint64_t sum_heads() const;
    bool operator==(const BudgetPlan&) const = default;
};

/// Per-layer mean of slot mean diversities, skipping empty slots. A layer
/// whose slots are all empty scores -1.
std::vector<double> layer_diversity(
    const std::vector<std::vector<std::optional<double>>>& slot_means);

/// Splits the total budget across layers (softmax over layer scores, or
/// uniformly) and then across heads. Integer rounding is floor plus
/// largest-remainder; every head is raised to min_head_budget, funded by
/// decrementing the largest entries, so the plan total never exceeds the
/// budget. min_head_budget must already be resolved (non-zero) in config.
BudgetPlan allocate(std::span<const double> layer_scores, const EngineConfig& config);

}  // namespace rollkv
