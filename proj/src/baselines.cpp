// Copyright (C) 2026 The rollkv authors
// SPDX-License-Identifier: Apache-2.0

#include "rollkv/baselines.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "rollkv/numerics.hpp"
#include "rollkv/rng.hpp"

namespace rollkv {

PolicyKind policy_from_string(const std::string& s) {
    if (s == "diversity") return PolicyKind::Diversity;
    if (s == "attn-oracle") return PolicyKind::AttentionOracle;
    if (s == "random") return PolicyKind::Random;
    if (s == "recency") return PolicyKind::Recency;
    throw std::invalid_argument("unknown policy: " + s);
}

std::string to_string(PolicyKind p) {
    switch (p) {
        case PolicyKind::Diversity: return "diversity";
        case PolicyKind::AttentionOracle: return "attn-oracle";
        case PolicyKind::Random: return "random";
        case PolicyKind::Recency: return "recency";
    }
    return "unknown";
}

SlotScores attention_oracle_scores(const HeadCache& slot,
                                   std::span<const float> queries, std::size_t n_q,
                                   double scale) {
    if (n_q == 0) {
        throw std::invalid_argument("empty queries");
    }
    const std::size_t n_anchor = slot.anchor.size();
    const std::size_t n_kv = n_anchor + slot.candidates.size();
    if (n_kv == 0) {
        throw std::invalid_argument("empty context");
    }
    const std::size_t d_k = queries.size() / n_q;
    std::vector<float> keys(n_kv * d_k);
    std::size_t row = 0;
    for (const auto* segment : {&slot.anchor, &slot.candidates}) {
        for (const TokenEntry& e : *segment) {
            std::copy(e.key.begin(), e.key.end(), keys.begin() + row * d_k);
            ++row;
        }
    }
    // Full weight-matrix materialization: this is the cost the diversity
    // policy exists to avoid, kept here as the measured alternative.
    const std::vector<double> weights =
        attention_weights(queries, n_q, d_k, keys, n_kv, scale);

    SlotScores out;
    out.layer = slot.layer;
    out.head = slot.head;
    out.scores.reserve(slot.candidates.size());
    for (std::size_t j = 0; j < slot.candidates.size(); ++j) {
        double importance = 0.0;
        for (std::size_t q = 0; q < n_q; ++q) {
            importance += weights[q * n_kv + n_anchor + j];
        }
        out.scores.emplace_back(slot.candidates[j].insert_seq, importance);
    }
    return out;
}

std::vector<std::uint64_t> random_keep(const std::vector<TokenEntry>& candidates,
                                       std::size_t budget, std::uint64_t seed) {
    const std::size_t n = candidates.size();
    if (budget >= n) {
        std::vector<std::uint64_t> all;
        all.reserve(n);
        for (const TokenEntry& e : candidates) {
            all.push_back(e.insert_seq);
        }
        return all;
    }
    std::vector<std::uint32_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng(seed);
    std::vector<std::uint64_t> kept;
    kept.reserve(budget);
    for (std::size_t i = 0; i < budget; ++i) {
        const std::size_t j = i + rng.bounded(n - i);
        std::swap(idx[i], idx[j]);
        kept.push_back(candidates[idx[i]].insert_seq);
    }
    return kept;
}

std::vector<std::uint64_t> recency_keep(const std::vector<TokenEntry>& candidates,
                                        std::size_t budget) {
    const std::size_t n = candidates.size();
    const std::size_t keep = std::min(budget, n);
    std::vector<std::uint64_t> seqs;
    seqs.reserve(n);
    for (const TokenEntry& e : candidates) {
        seqs.push_back(e.insert_seq);
    }
    std::partial_sort(seqs.begin(), seqs.begin() + static_cast<std::ptrdiff_t>(keep),
                      seqs.end(), std::greater<>());
    seqs.resize(keep);
    return seqs;
}

}  // namespace rollkv
