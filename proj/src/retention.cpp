// Copyright (C) 2026 The rollkv authors
// SPDX-License-Identifier: Apache-2.0

#include "rollkv/retention.hpp"

#include <algorithm>
#include <stdexcept>

#include "rollkv/numerics.hpp"

namespace rollkv {

Vec32 mean_key(const std::vector<TokenEntry>& candidates) {
    if (candidates.empty()) {
        throw std::invalid_argument("no candidates");
    }
    const std::size_t d = candidates.front().key_unit.size();
    std::vector<double> acc(d, 0.0);
    for (const TokenEntry& e : candidates) {
        for (std::size_t i = 0; i < d; ++i) {
            acc[i] += static_cast<double>(e.key_unit[i]);
        }
    }
    Vec32 mu(d);
    const double inv = 1.0 / static_cast<double>(candidates.size());
    for (std::size_t i = 0; i < d; ++i) {
        mu[i] = static_cast<float>(acc[i] * inv);
    }
    return mu;
}

SlotScores diversity_scores(const std::vector<TokenEntry>& candidates,
                            std::span<const float> mu,
                            std::uint32_t layer, std::uint32_t head) {
    SlotScores out;
    out.layer = layer;
    out.head = head;
    out.mean_key.assign(mu.begin(), mu.end());
    out.scores.reserve(candidates.size());
    for (const TokenEntry& e : candidates) {
        double s;
        if (is_zero_sentinel(e.key_unit)) {
            s = -1.0;
        } else {
            s = -cos_sim(mu, e.key_unit);
        }
        out.scores.emplace_back(e.insert_seq, s);
    }
    return out;
}

SlotScores diversity_scores(const HeadCache& slot) {
    const Vec32 mu = mean_key(slot.candidates);
    return diversity_scores(slot.candidates, mu, slot.layer, slot.head);
}

std::vector<std::uint64_t> select_topk(const SlotScores& scores, std::size_t budget,
                                       Tiebreak tiebreak) {
    if (budget == 0) {
        return {};
    }
    if (scores.scores.size() <= budget) {
        std::vector<std::uint64_t> all;
        all.reserve(scores.scores.size());
        for (const auto& [seq, s] : scores.scores) {
            all.push_back(seq);
        }
        return all;
    }
    std::vector<std::pair<std::uint64_t, double>> ranked = scores.scores;
    const bool recent_first = tiebreak == Tiebreak::RecentFirst;
    std::sort(ranked.begin(), ranked.end(),
              [recent_first](const auto& a, const auto& b) {
                  if (a.second != b.second) {
                      return a.second > b.second;
                  }
                  return recent_first ? a.first > b.first : a.first < b.first;
              });
    std::vector<std::uint64_t> kept;
    kept.reserve(budget);
    for (std::size_t i = 0; i < budget; ++i) {
        kept.push_back(ranked[i].first);
    }
    return kept;
}

double slot_mean_diversity(const SlotScores& scores) {
    if (scores.scores.empty()) {
        throw std::invalid_argument("empty scores");
    }
    double acc = 0.0;
    for (const auto& [seq, s] : scores.scores) {
        acc += s;
    }
    return acc / static_cast<double>(scores.scores.size());
}

}  // namespace rollkv
