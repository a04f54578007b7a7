// Copyright (C) 2026 The rollkv authors
// SPDX-License-Identifier: Apache-2.0

#include "rollkv/budget.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "rollkv/numerics.hpp"

namespace rollkv {

std::uint64_t BudgetPlan::sum_heads() const {
    std::uint64_t total = 0;
    for (const auto& row : head_budget) {
        total = std::accumulate(row.begin(), row.end(), total);
    }
    return total;
}

std::vector<double> layer_diversity(
    const std::vector<std::vector<std::optional<double>>>& slot_means) {
    std::vector<double> out(slot_means.size());
    for (std::size_t l = 0; l < slot_means.size(); ++l) {
        double acc = 0.0;
        std::size_t n = 0;
        for (const auto& m : slot_means[l]) {
            if (m.has_value()) {
                acc += *m;
                ++n;
            }
        }
        out[l] = (n == 0) ? -1.0 : acc / static_cast<double>(n);
    }
    return out;
}

BudgetPlan allocate(std::span<const double> layer_scores, const EngineConfig& config) {
    config.validate();
    const std::uint32_t L = config.layers;
    const std::uint32_t H = config.heads;
    if (layer_scores.size() != L) {
        throw std::invalid_argument("layer score count mismatch");
    }
    if (config.min_head_budget == 0) {
        throw std::invalid_argument("min_head_budget not resolved");
    }

    BudgetPlan plan;
    plan.tau = config.tau;
    plan.total_budget = static_cast<std::uint64_t>(config.b_init_per_head) * L * H;

    if (config.layer_allocation == LayerAllocation::Uniform) {
        plan.layer_share.assign(L, 1.0 / static_cast<double>(L));
    } else {
        plan.layer_share = softmax(layer_scores, config.tau);
    }

    // Integer layer split: floor, then largest remainder. Ordering for the
    // remainder tokens is (fractional part desc, share desc, layer asc).
    const double total = static_cast<double>(plan.total_budget);
    plan.layer_budget_raw.resize(L);
    std::vector<double> frac(L);
    std::uint64_t assigned = 0;
    for (std::uint32_t l = 0; l < L; ++l) {
        const double exact = plan.layer_share[l] * total;
        plan.layer_budget_raw[l] = static_cast<std::uint64_t>(std::floor(exact));
        frac[l] = exact - std::floor(exact);
        assigned += plan.layer_budget_raw[l];
    }
    std::vector<std::uint32_t> order(L);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
        if (frac[a] != frac[b]) return frac[a] > frac[b];
        if (plan.layer_share[a] != plan.layer_share[b])
            return plan.layer_share[a] > plan.layer_share[b];
        return a < b;
    });
    for (std::uint64_t r = 0; assigned < plan.total_budget; ++r, ++assigned) {
        ++plan.layer_budget_raw[order[r % L]];
    }

    // Head split: floor, remainder to the lowest head indices.
    plan.head_budget.assign(L, std::vector<std::uint64_t>(H, 0));
    for (std::uint32_t l = 0; l < L; ++l) {
        const std::uint64_t base = plan.layer_budget_raw[l] / H;
        const std::uint64_t rem = plan.layer_budget_raw[l] % H;
        for (std::uint32_t h = 0; h < H; ++h) {
            plan.head_budget[l][h] = base + (h < rem ? 1 : 0);
        }
    }

    // Raise starved heads to min_head_budget, funded by decrementing the
    // largest entries so the plan total stays within the budget. Feasible
    // because b_init_per_head >= min_head_budget.
    const std::uint64_t min_b = config.min_head_budget;
    std::uint64_t deficit = 0;
    for (std::uint32_t l = 0; l < L; ++l) {
        for (std::uint32_t h = 0; h < H; ++h) {
            if (plan.head_budget[l][h] < min_b) {
                deficit += min_b - plan.head_budget[l][h];
                plan.head_budget[l][h] = min_b;
            }
        }
    }
    while (deficit > 0) {
        std::uint32_t best_l = 0, best_h = 0;
        std::uint64_t best = 0;
        for (std::uint32_t l = 0; l < L; ++l) {
            for (std::uint32_t h = 0; h < H; ++h) {
                if (plan.head_budget[l][h] > best) {
                    best = plan.head_budget[l][h];
                    best_l = l;
                    best_h = h;
                }
            }
        }
        if (best <= min_b) {
            break;  // nothing left above the floor
        }
        --plan.head_budget[best_l][best_h];
        --deficit;
    }

    plan.layer_budget.resize(L);
    for (std::uint32_t l = 0; l < L; ++l) {
        plan.layer_budget[l] =
            std::accumulate(plan.head_budget[l].begin(), plan.head_budget[l].end(),
                            std::uint64_t{0});
    }
    return plan;
}

}  // namespace rollkv
