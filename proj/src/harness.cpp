// Copyright (C) 2026 The rollkv authors
// SPDX-License-Identifier: Apache-2.0

#include "rollkv/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <thread>

#include "rollkv/retention.hpp"
#include "rollkv/rng.hpp"

namespace rollkv {

namespace {

using Clock = std::chrono::steady_clock;

class GeneratorSource final : public FrameSource {
public:
    explicit GeneratorSource(const StreamSpec& spec) : m_gen(spec) {}
    TraceHeader dims() const override {
        const StreamSpec& s = m_gen.spec();
        return TraceHeader{s.layers, s.heads, s.d_k, s.d_v, s.tokens_per_frame, s.n_frames};
    }
    std::optional<FramePair> next() override {
        if (m_gen.frames_generated() >= m_gen.spec().n_frames) {
            return std::nullopt;
        }
        return m_gen.next();
    }

private:
    StreamGenerator m_gen;
};

class TraceSource final : public FrameSource {
public:
    explicit TraceSource(const std::string& path) : m_reader(path) {}
    TraceHeader dims() const override { return m_reader.header(); }
    std::optional<FramePair> next() override { return m_reader.next(); }

private:
    TraceReader m_reader;
};

/// Runs fn(slot_index) over [0, n) with up to `threads` workers. Results
/// must be written to per-slot cells; the partition is deterministic. The
/// first worker exception is rethrown after the join.
void for_each_slot(std::size_t n, std::uint32_t threads,
                   const std::function<void(std::size_t)>& fn) {
    if (threads <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) {
            fn(i);
        }
        return;
    }
    const std::size_t workers = std::min<std::size_t>(threads, n);
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w]() {
            try {
                for (std::size_t i = w; i < n; i += workers) {
                    fn(i);
                }
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) {
        th.join();
    }
    for (const auto& err : errors) {
        if (err) {
            std::rethrow_exception(err);
        }
    }
}

/// Unpruned reference store: packed per-slot key/value rows, append-only.
class ShadowCache {
public:
    ShadowCache(const EngineConfig& cfg, std::uint64_t max_tokens)
        : m_cfg(cfg),
          m_max_tokens(max_tokens),
          m_keys(static_cast<std::size_t>(cfg.layers) * cfg.heads),
          m_values(static_cast<std::size_t>(cfg.layers) * cfg.heads) {}

    /// False when appending would exceed the token cap (frame not added).
    bool append(const FrameKV& frame) {
        const std::uint64_t added =
            static_cast<std::uint64_t>(frame.tokens) * m_keys.size();
        if (m_tokens + added > m_max_tokens) {
            return false;
        }
        for (std::uint32_t l = 0; l < frame.layers; ++l) {
            for (std::uint32_t h = 0; h < frame.heads; ++h) {
                const std::size_t s = static_cast<std::size_t>(l) * frame.heads + h;
                const auto kb = frame.key_block(l, h);
                const auto vb = frame.value_block(l, h);
                m_keys[s].insert(m_keys[s].end(), kb.begin(), kb.end());
                m_values[s].insert(m_values[s].end(), vb.begin(), vb.end());
            }
        }
        m_tokens += added;
        return true;
    }

    FrameOutputs forward(const FrameQueries& queries) const {
        const double scale = 1.0 / std::sqrt(static_cast<double>(m_cfg.d_k));
        FrameOutputs out;
        out.frame_id = queries.frame_id;
        out.layers = m_cfg.layers;
        out.heads = m_cfg.heads;
        out.tokens = queries.tokens;
        out.d_v = m_cfg.d_v;
        out.outputs.resize(m_keys.size() * queries.tokens * m_cfg.d_v);
        for (std::size_t s = 0; s < m_keys.size(); ++s) {
            const std::size_t n_kv = m_keys[s].size() / m_cfg.d_k;
            const std::uint32_t l = static_cast<std::uint32_t>(s / m_cfg.heads);
            const std::uint32_t h = static_cast<std::uint32_t>(s % m_cfg.heads);
            Vec32 slot_out = attend_streaming(
                queries.query_block(l, h), queries.tokens, m_cfg.d_k, m_keys[s],
                m_values[s], n_kv, m_cfg.d_v, scale, m_cfg.t_block);
            std::copy(slot_out.begin(), slot_out.end(),
                      out.outputs.begin() + s * queries.tokens * m_cfg.d_v);
        }
        return out;
    }

private:
    EngineConfig m_cfg;
    std::uint64_t m_max_tokens;
    std::uint64_t m_tokens = 0;
    std::vector<std::vector<float>> m_keys;
    std::vector<std::vector<float>> m_values;
};

}  // namespace

std::unique_ptr<FrameSource> make_generator_source(const StreamSpec& spec) {
    return std::make_unique<GeneratorSource>(spec);
}

std::unique_ptr<FrameSource> make_trace_source(const std::string& path) {
    return std::make_unique<TraceSource>(path);
}

LatencySummary summarize_latencies(std::vector<std::uint64_t> ns) {
    LatencySummary s;
    s.count = ns.size();
    if (ns.empty()) {
        return s;
    }
    std::sort(ns.begin(), ns.end());
    auto pct = [&](double p) {
        const std::size_t idx = static_cast<std::size_t>(
            std::floor(p * static_cast<double>(ns.size() - 1)));
        return ns[idx];
    };
    s.p50_ns = pct(0.50);
    s.p95_ns = pct(0.95);
    s.max_ns = ns.back();
    return s;
}

double RunMetrics::mean_fidelity() const {
    if (fidelity.empty()) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    double acc = 0.0;
    for (const auto& [frame, err] : fidelity) {
        acc += err;
    }
    return acc / static_cast<double>(fidelity.size());
}

PruneResult execute_prune_event(CacheState& cache, const FrameQueries* queries,
                                const PruneSettings& settings) {
    const EngineConfig& cfg = cache.config();
    const std::size_t n_slots = cache.slot_count();
    const double scale = 1.0 / std::sqrt(static_cast<double>(cfg.d_k));

    const bool allocation_needs_diversity =
        settings.frozen == nullptr &&
        cfg.layer_allocation == LayerAllocation::Adaptive;
    const bool want_diversity =
        settings.policy == PolicyKind::Diversity || allocation_needs_diversity;
    const bool want_oracle = settings.policy == PolicyKind::AttentionOracle;
    if (want_oracle && queries == nullptr) {
        throw std::invalid_argument("empty queries");
    }

    std::vector<SlotScores> policy_scores(n_slots);
    std::vector<std::vector<std::optional<double>>> slot_means(
        cfg.layers, std::vector<std::optional<double>>(cfg.heads));

    for_each_slot(n_slots, settings.threads, [&](std::size_t s) {
        const std::uint32_t l = static_cast<std::uint32_t>(s / cfg.heads);
        const std::uint32_t h = static_cast<std::uint32_t>(s % cfg.heads);
        const HeadCache& slot = cache.slot(l, h);
        if (slot.candidates.empty()) {
            policy_scores[s].layer = l;
            policy_scores[s].head = h;
            return;
        }
        if (want_diversity) {
            SlotScores div = diversity_scores(slot);
            slot_means[l][h] = slot_mean_diversity(div);
            if (settings.policy == PolicyKind::Diversity) {
                policy_scores[s] = std::move(div);
            }
        }
        if (want_oracle) {
            policy_scores[s] = attention_oracle_scores(
                slot, queries->query_block(l, h), queries->tokens, scale);
        }
    });

    PruneResult result;
    if (settings.frozen != nullptr) {
        result.plan = *settings.frozen;
    } else {
        result.plan = allocate(layer_diversity(slot_means), cfg);
    }

    KeepSets keep(n_slots);
    for_each_slot(n_slots, settings.threads, [&](std::size_t s) {
        const std::uint32_t l = static_cast<std::uint32_t>(s / cfg.heads);
        const std::uint32_t h = static_cast<std::uint32_t>(s % cfg.heads);
        const HeadCache& slot = cache.slot(l, h);
        const std::size_t budget = result.plan.head(l, h);
        if (slot.candidates.empty()) {
            return;
        }
        switch (settings.policy) {
            case PolicyKind::Diversity:
            case PolicyKind::AttentionOracle:
                keep[s] = select_topk(policy_scores[s], budget, cfg.tiebreak);
                break;
            case PolicyKind::Random:
                keep[s] = random_keep(slot.candidates, budget,
                                      mix64(settings.run_seed, s, settings.event_index));
                break;
            case PolicyKind::Recency:
                keep[s] = recency_keep(slot.candidates, budget);
                break;
        }
    });

    result.report = cache.apply_retention(keep);
    result.kept = std::move(keep);
    return result;
}

RunMetrics run(const RunConfig& config) {
    std::unique_ptr<FrameSource> source =
        config.trace_path.empty() ? make_generator_source(config.stream)
                                  : make_trace_source(config.trace_path);
    const TraceHeader dims = source->dims();

    EngineConfig engine = config.engine;
    if (engine.layers != dims.layers || engine.heads != dims.heads ||
        engine.d_k != dims.d_k || engine.d_v != dims.d_v) {
        throw std::invalid_argument("trace/config dimension mismatch");
    }
    if (engine.min_head_budget == 0) {
        engine.min_head_budget = dims.tokens;  // one frame of tokens per head
    }
    engine.validate();
    if (engine.b_init_per_head < engine.min_head_budget) {
        throw std::invalid_argument("b_init_per_head must be >= min_head_budget");
    }

    CacheState cache(engine);
    std::optional<ShadowCache> shadow;
    if (config.fidelity_every > 0) {
        shadow.emplace(engine, config.shadow_max_tokens);
    }
    bool shadow_active = shadow.has_value();

    RunMetrics metrics;
    metrics.per_frame.reserve(dims.n_frames);
    std::optional<BudgetPlan> frozen_plan;
    std::uint32_t event_index = 0;

    const auto t_start = Clock::now();
    std::vector<double> mean_cand_acc(cache.slot_count(), 0.0);
    std::vector<std::uint64_t> max_cand(cache.slot_count(), 0);

    while (auto fp = source->next()) {
        const std::uint32_t t = fp->kv.frame_id;
        cache.append_frame(fp->kv);
        metrics.total_tokens +=
            static_cast<std::uint64_t>(fp->kv.tokens) * cache.slot_count();

        if (shadow_active && !shadow->append(fp->kv)) {
            shadow_active = false;
            metrics.notices.push_back(
                "fidelity sampling stopped at frame " + std::to_string(t) +
                ": shadow reference cap reached");
        }

        FrameRecord record;
        record.frame = t;
        record.resident_after_append = cache.resident_tokens();
        metrics.peak_resident_tokens =
            std::max(metrics.peak_resident_tokens, record.resident_after_append);

        if ((t + 1) % engine.prune_interval == 0) {
            PruneSettings ps;
            ps.policy = config.policy;
            ps.run_seed = config.stream.seed;
            ps.event_index = event_index;
            ps.frozen = frozen_plan ? &*frozen_plan : nullptr;
            ps.threads = config.threads;

            const auto p0 = Clock::now();
            PruneResult pr = execute_prune_event(cache, &fp->queries, ps);
            const auto p1 = Clock::now();
            const std::uint64_t ns = static_cast<std::uint64_t>(
                std::chrono::duration_cast<std::chrono::nanoseconds>(p1 - p0).count());

            record.prune_ns = ns;
            metrics.prune_latency_ns.push_back(ns);
            metrics.total_evicted += pr.report.total_evicted;
            ++metrics.prune_events;

            if (engine.freeze_after_first && !frozen_plan) {
                frozen_plan = pr.plan;
            }
            if (config.collect_keep_sets) {
                KeepEvent ke;
                ke.event_index = event_index;
                ke.frame_id = t;
                ke.kept = pr.kept;
                for (auto& slot_keep : ke.kept) {
                    std::sort(slot_keep.begin(), slot_keep.end());
                }
                metrics.keep_history.push_back(std::move(ke));
            }
            if (config.on_prune) {
                PruneEvent ev;
                ev.event_index = event_index;
                ev.frame_id = t;
                ev.plan = &pr.plan;
                ev.counts_after = cache.snapshot_counts();
                ev.latency_ns = ns;
                config.on_prune(ev);
            }
            ++event_index;
        }
        record.resident_after_prune = cache.resident_tokens();

        const auto counts = cache.snapshot_counts();
        for (std::size_t s = 0; s < counts.size(); ++s) {
            mean_cand_acc[s] += static_cast<double>(counts[s].candidate_count);
            max_cand[s] = std::max(max_cand[s], counts[s].candidate_count);
        }

        if (config.fidelity_every > 0 && shadow_active &&
            (t + 1) % config.fidelity_every == 0) {
            const FrameOutputs pruned =
                forward_frame(cache, fp->queries, AttendMode::Streaming);
            const FrameOutputs full = shadow->forward(fp->queries);
            const double err = fidelity_error(pruned, full);
            record.fidelity = err;
            metrics.fidelity.emplace_back(t, err);
        }

        metrics.per_frame.push_back(std::move(record));
        ++metrics.frames;
    }

    const auto t_end = Clock::now();
    metrics.wall_seconds =
        std::chrono::duration_cast<std::chrono::duration<double>>(t_end - t_start).count();
    metrics.tokens_per_sec = metrics.wall_seconds > 0.0
                                 ? static_cast<double>(metrics.total_tokens) /
                                       metrics.wall_seconds
                                 : 0.0;
    metrics.prune_latency = summarize_latencies(metrics.prune_latency_ns);

    const auto final_counts = cache.snapshot_counts();
    metrics.slots.resize(final_counts.size());
    for (std::size_t s = 0; s < final_counts.size(); ++s) {
        metrics.slots[s].layer = final_counts[s].layer;
        metrics.slots[s].head = final_counts[s].head;
        metrics.slots[s].anchor_count = final_counts[s].anchor_count;
        metrics.slots[s].mean_candidates =
            metrics.frames > 0 ? mean_cand_acc[s] / metrics.frames : 0.0;
        metrics.slots[s].max_candidates = max_cand[s];
    }
    return metrics;
}

namespace {

double jaccard(const std::vector<std::uint64_t>& a, const std::vector<std::uint64_t>& b) {
    if (a.empty() && b.empty()) {
        return 1.0;
    }
    std::size_t inter = 0;
    std::size_t i = 0;
    std::size_t j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] == b[j]) {
            ++inter;
            ++i;
            ++j;
        } else if (a[i] < b[j]) {
            ++i;
        } else {
            ++j;
        }
    }
    const std::size_t uni = a.size() + b.size() - inter;
    return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

double mean_keep_overlap(const std::vector<KeepEvent>& a, const std::vector<KeepEvent>& b) {
    double acc = 0.0;
    std::size_t n = 0;
    const std::size_t events = std::min(a.size(), b.size());
    for (std::size_t e = 0; e < events; ++e) {
        if (a[e].frame_id != b[e].frame_id) {
            continue;
        }
        const std::size_t slots = std::min(a[e].kept.size(), b[e].kept.size());
        for (std::size_t s = 0; s < slots; ++s) {
            acc += jaccard(a[e].kept[s], b[e].kept[s]);
            ++n;
        }
    }
    return n == 0 ? std::numeric_limits<double>::quiet_NaN()
                  : acc / static_cast<double>(n);
}

}  // namespace

CompareReport compare(const std::vector<CompareArm>& arms, const CompareOptions& options) {
    if (arms.size() < 2) {
        throw std::invalid_argument("compare needs at least two arms");
    }
    const RunConfig& base = arms.front().config;
    for (const CompareArm& arm : arms) {
        const RunConfig& c = arm.config;
        StreamSpec a = c.stream;
        StreamSpec b = base.stream;
        a.seed = b.seed = 0;  // seeds are applied per sweep iteration
        const bool same_stream =
            a.layers == b.layers && a.heads == b.heads && a.d_k == b.d_k &&
            a.d_v == b.d_v && a.tokens_per_frame == b.tokens_per_frame &&
            a.n_frames == b.n_frames && a.m_clusters == b.m_clusters &&
            a.drift_angle == b.drift_angle && a.noise_sigma == b.noise_sigma &&
            a.novelty_rho == b.novelty_rho &&
            a.cluster_weight_decay == b.cluster_weight_decay &&
            a.query_lookback == b.query_lookback &&
            a.query_first_frame_bias == b.query_first_frame_bias &&
            a.value_noise == b.value_noise && a.feature_rms == b.feature_rms &&
            a.query_rotation_angle == b.query_rotation_angle &&
            a.m_clusters_per_layer == b.m_clusters_per_layer &&
            c.trace_path == base.trace_path;
        if (!same_stream) {
            throw std::invalid_argument("mismatched stream specs");
        }
        if (c.engine.layers != base.engine.layers || c.engine.heads != base.engine.heads ||
            c.engine.d_k != base.engine.d_k || c.engine.d_v != base.engine.d_v) {
            throw std::invalid_argument("mismatched engine dimensions");
        }
    }

    std::size_t oracle_idx = arms.size();
    std::size_t oracle_count = 0;
    for (std::size_t i = 0; i < arms.size(); ++i) {
        if (arms[i].config.policy == PolicyKind::AttentionOracle) {
            oracle_idx = i;
            ++oracle_count;
        }
    }
    const bool overlap = oracle_count == 1;

    CompareReport report;
    for (const CompareArm& arm : arms) {
        report.arms.push_back(arm.name);
    }
    report.seeds = options.seeds.empty()
                       ? std::vector<std::uint64_t>{base.stream.seed}
                       : options.seeds;

    std::vector<std::vector<double>> fidelity_by_arm(arms.size());
    for (std::uint64_t seed : report.seeds) {
        std::vector<RunMetrics> results(arms.size());
        for (std::size_t i = 0; i < arms.size(); ++i) {
            RunConfig cfg = arms[i].config;
            cfg.stream.seed = seed;
            cfg.collect_keep_sets = cfg.collect_keep_sets || overlap;
            results[i] = run(cfg);
        }
        for (std::size_t i = 0; i < arms.size(); ++i) {
            ArmSeedRow row;
            row.arm = arms[i].name;
            row.seed = seed;
            row.mean_fidelity = results[i].mean_fidelity();
            row.prune_latency = results[i].prune_latency;
            row.peak_resident_tokens = results[i].peak_resident_tokens;
            row.tokens_per_sec = results[i].tokens_per_sec;
            row.fidelity = results[i].fidelity;
            if (overlap && i != oracle_idx) {
                const double j = mean_keep_overlap(results[i].keep_history,
                                                   results[oracle_idx].keep_history);
                if (!std::isnan(j)) {
                    row.jaccard_vs_oracle = j;
                }
            }
            fidelity_by_arm[i].push_back(row.mean_fidelity);
            report.rows.push_back(std::move(row));
        }
    }

    for (std::size_t i = 0; i < arms.size(); ++i) {
        ArmAggregate agg;
        agg.arm = arms[i].name;
        double fid = 0.0;
        double lat = 0.0;
        double peak = 0.0;
        double jac = 0.0;
        std::size_t jac_n = 0;
        std::size_t n = 0;
        for (const ArmSeedRow& row : report.rows) {
            if (row.arm != arms[i].name) {
                continue;
            }
            fid += row.mean_fidelity;
            lat += static_cast<double>(row.prune_latency.p50_ns);
            peak += static_cast<double>(row.peak_resident_tokens);
            if (row.jaccard_vs_oracle) {
                jac += *row.jaccard_vs_oracle;
                ++jac_n;
            }
            ++n;
        }
        agg.mean_fidelity = n ? fid / static_cast<double>(n) : 0.0;
        agg.mean_p50_latency_ns = n ? lat / static_cast<double>(n) : 0.0;
        agg.mean_peak_resident = n ? peak / static_cast<double>(n) : 0.0;
        if (jac_n > 0) {
            agg.mean_jaccard_vs_oracle = jac / static_cast<double>(jac_n);
        }
        report.aggregates.push_back(std::move(agg));
    }

    for (std::size_t i = 0; i < arms.size(); ++i) {
        for (std::size_t j = i + 1; j < arms.size(); ++j) {
            PairWins pw;
            pw.arm_a = arms[i].name;
            pw.arm_b = arms[j].name;
            for (std::size_t s = 0; s < report.seeds.size(); ++s) {
                const double fa = fidelity_by_arm[i][s];
                const double fb = fidelity_by_arm[j][s];
                if (std::isnan(fa) || std::isnan(fb) || fa == fb) {
                    ++pw.ties;
                } else if (fa < fb) {
                    ++pw.wins_a;
                } else {
                    ++pw.wins_b;
                }
            }
            report.fidelity_wins.push_back(std::move(pw));
        }
    }
    return report;
}

}  // namespace rollkv
