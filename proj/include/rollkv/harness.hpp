// Copyright (C) 2026 The rollkv authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "rollkv/attention.hpp"
#include "rollkv/baselines.hpp"
#include "rollkv/budget.hpp"
#include "rollkv/cache.hpp"
#include "rollkv/synth.hpp"
#include "rollkv/trace.hpp"

namespace rollkv {

/// Uniform frame feed for the run loop: synthetic generator or trace file.
class FrameSource {
public:
    virtual ~FrameSource() = default;
    virtual TraceHeader dims() const = 0;
    virtual std::optional<FramePair> next() = 0;
};

std::unique_ptr<FrameSource> make_generator_source(const StreamSpec& spec);
std::unique_ptr<FrameSource> make_trace_source(const std::string& path);

struct PruneEvent {
    std::uint32_t event_index = 0;
    std::uint32_t frame_id = 0;
    const BudgetPlan* plan = nullptr;
    std::vector<SlotCounts> counts_after;
    std::uint64_t latency_ns = 0;
};
using PruneObserver = std::function<void(const PruneEvent&)>;

struct RunConfig {
    EngineConfig engine;
    StreamSpec stream;
    std::string trace_path;  // non-empty: replay this trace instead of generating
    PolicyKind policy = PolicyKind::Diversity;
    std::uint32_t fidelity_every = 0;  // full-cache reference cadence; 0 = never
    std::uint64_t shadow_max_tokens = 500000;  // unpruned reference cache cap
    bool collect_keep_sets = false;
    std::uint32_t threads = 1;  // slot fan-out within a prune event
    PruneObserver on_prune;     // test/diagnostic hook
};

struct FrameRecord {
    std::uint32_t frame = 0;
    std::uint64_t resident_after_append = 0;
    std::uint64_t resident_after_prune = 0;
    std::optional<double> fidelity;
    std::optional<std::uint64_t> prune_ns;
};

struct SlotStat {
    std::uint32_t layer = 0;
    std::uint32_t head = 0;
    std::uint64_t anchor_count = 0;
    double mean_candidates = 0.0;
    std::uint64_t max_candidates = 0;
};

struct LatencySummary {
    std::uint64_t p50_ns = 0;
    std::uint64_t p95_ns = 0;
    std::uint64_t max_ns = 0;
    std::uint64_t count = 0;
};
LatencySummary summarize_latencies(std::vector<std::uint64_t> ns);

struct KeepEvent {
    std::uint32_t event_index = 0;
    std::uint32_t frame_id = 0;
    KeepSets kept;  // sorted per slot
};

struct RunMetrics {
    std::uint32_t frames = 0;
    std::uint64_t total_tokens = 0;
    std::uint64_t peak_resident_tokens = 0;
    std::uint64_t prune_events = 0;
    std::uint64_t total_evicted = 0;
    std::vector<FrameRecord> per_frame;
    std::vector<SlotStat> slots;
    std::vector<std::pair<std::uint32_t, double>> fidelity;  // (frame, error)
    std::vector<std::uint64_t> prune_latency_ns;
    LatencySummary prune_latency;
    double wall_seconds = 0.0;
    double tokens_per_sec = 0.0;
    std::vector<std::string> notices;
    std::vector<KeepEvent> keep_history;  // only when collect_keep_sets

    double mean_fidelity() const;
};

/// Full frame loop: append -> (score, allocate, retain) -> fidelity
/// sampling. Deterministic given seeds except wall-clock fields. Throws
/// "trace/config dimension mismatch" before touching any frame when the
/// source disagrees with the engine config.
RunMetrics run(const RunConfig& config);

/// One score -> allocate -> retain cycle on a prepared cache. queries may
/// be null except for the attention-oracle policy. frozen, when set,
/// bypasses allocation and reuses the given plan.
struct PruneSettings {
    PolicyKind policy = PolicyKind::Diversity;
    std::uint64_t run_seed = 0;      // random-policy substream root
    std::uint32_t event_index = 0;
    const BudgetPlan* frozen = nullptr;
    std::uint32_t threads = 1;
};
struct PruneResult {
    BudgetPlan plan;
    EvictionReport report;
    KeepSets kept;
};
PruneResult execute_prune_event(CacheState& cache, const FrameQueries* queries,
                                const PruneSettings& settings);

struct CompareArm {
    std::string name;
    RunConfig config;
};

struct CompareOptions {
    std::vector<std::uint64_t> seeds;  // empty: the arms' own stream seed
};

struct ArmSeedRow {
    std::string arm;
    std::uint64_t seed = 0;
    double mean_fidelity = 0.0;
    LatencySummary prune_latency;
    std::uint64_t peak_resident_tokens = 0;
    double tokens_per_sec = 0.0;
    std::optional<double> jaccard_vs_oracle;
    std::vector<std::pair<std::uint32_t, double>> fidelity;  // per sampled frame
};

struct ArmAggregate {
    std::string arm;
    double mean_fidelity = 0.0;
    double mean_p50_latency_ns = 0.0;
    double mean_peak_resident = 0.0;
    std::optional<double> mean_jaccard_vs_oracle;
};

struct PairWins {
    std::string arm_a;
    std::string arm_b;
    std::uint32_t wins_a = 0;  // seeds where a's mean fidelity is strictly lower
    std::uint32_t wins_b = 0;
    std::uint32_t ties = 0;
};

struct CompareReport {
    std::vector<std::string> arms;
    std::vector<std::uint64_t> seeds;
    std::vector<ArmSeedRow> rows;
    std::vector<ArmAggregate> aggregates;
    std::vector<PairWins> fidelity_wins;
    std::vector<std::string> notices;
};

/// Paired multi-arm comparison. Arms must share the stream (or trace) and
/// engine dimensions; only policy/toggles may differ. Every seed in options
/// is applied to all arms in lockstep. When exactly one arm runs the
/// attention-oracle policy, retained-set Jaccard overlap against it is
/// computed per (event, slot) for the other arms.
CompareReport compare(const std::vector<CompareArm>& arms, const CompareOptions& options);

}  // namespace rollkv
