// Copyright (C) 2026 The rollkv authors
// SPDX-License-Identifier: Apache-2.0

#include "rollkv/report.hpp"

#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

namespace rollkv {

using nlohmann::ordered_json;

ordered_json engine_config_json(const EngineConfig& e) {
    ordered_json j;
    j["layers"] = e.layers;
    j["heads"] = e.heads;
    j["d_k"] = e.d_k;
    j["d_v"] = e.d_v;
    j["b_init_per_head"] = e.b_init_per_head;
    j["tau"] = e.tau;
    j["anchor_frame_count"] = e.anchor_frame_count;
    j["prune_interval"] = e.prune_interval;
    j["min_head_budget"] = e.min_head_budget;
    j["tiebreak"] = to_string(e.tiebreak);
    j["layer_allocation"] = to_string(e.layer_allocation);
    j["anchor_enabled"] = e.anchor_enabled;
    j["freeze_after_first"] = e.freeze_after_first;
    j["t_block"] = e.t_block;
    return j;
}

ordered_json stream_spec_json(const StreamSpec& s) {
    ordered_json j;
    j["layers"] = s.layers;
    j["heads"] = s.heads;
    j["d_k"] = s.d_k;
    j["d_v"] = s.d_v;
    j["tokens_per_frame"] = s.tokens_per_frame;
    j["n_frames"] = s.n_frames;
    j["m_clusters"] = s.m_clusters;
    j["drift_angle"] = s.drift_angle;
    j["noise_sigma"] = s.noise_sigma;
    j["novelty_rho"] = s.novelty_rho;
    j["seed"] = s.seed;
    j["cluster_weight_decay"] = s.cluster_weight_decay;
    j["query_lookback"] = s.query_lookback;
    j["query_first_frame_bias"] = s.query_first_frame_bias;
    j["value_noise"] = s.value_noise;
    j["feature_rms"] = s.feature_rms;
    j["query_rotation_angle"] = s.query_rotation_angle;
    j["m_clusters_per_layer"] = s.m_clusters_per_layer;
    return j;
}

namespace {

ordered_json latency_json(const LatencySummary& l) {
    ordered_json j;
    j["p50_ns"] = l.p50_ns;
    j["p95_ns"] = l.p95_ns;
    j["max_ns"] = l.max_ns;
    j["count"] = l.count;
    return j;
}

}  // namespace

ordered_json run_report_json(const RunConfig& config, const RunMetrics& m) {
    ordered_json j;
    j["schema_version"] = kReportSchemaVersion;
    j["kind"] = "run";

    ordered_json cfg;
    cfg["policy"] = to_string(config.policy);
    cfg["engine"] = engine_config_json(config.engine);
    if (config.trace_path.empty()) {
        cfg["stream"] = stream_spec_json(config.stream);
    } else {
        cfg["trace"] = config.trace_path;
    }
    cfg["fidelity_every"] = config.fidelity_every;
    cfg["shadow_max_tokens"] = config.shadow_max_tokens;
    j["config"] = cfg;

    ordered_json metrics;
    metrics["frames"] = m.frames;
    metrics["total_tokens"] = m.total_tokens;
    metrics["peak_resident_tokens"] = m.peak_resident_tokens;
    metrics["prune_events"] = m.prune_events;
    metrics["total_evicted"] = m.total_evicted;
    metrics["mean_fidelity"] = m.mean_fidelity();  // NaN serializes as null
    ordered_json fid = ordered_json::array();
    for (const auto& [frame, err] : m.fidelity) {
        fid.push_back({{"frame", frame}, {"error", err}});
    }
    metrics["fidelity"] = fid;
    ordered_json slots = ordered_json::array();
    for (const SlotStat& s : m.slots) {
        slots.push_back({{"layer", s.layer},
                         {"head", s.head},
                         {"anchor_count", s.anchor_count},
                         {"mean_candidates", s.mean_candidates},
                         {"max_candidates", s.max_candidates}});
    }
    metrics["slots"] = slots;
    metrics["notices"] = m.notices;
    j["metrics"] = metrics;

    ordered_json timing;
    timing["wall_seconds"] = m.wall_seconds;
    timing["tokens_per_sec"] = m.tokens_per_sec;
    timing["prune_latency"] = latency_json(m.prune_latency);
    j["timing"] = timing;
    return j;
}

std::string run_report_csv(const RunMetrics& m) {
    std::ostringstream out;
    out << "# rollkv-csv run v" << kReportSchemaVersion << "\n";
    out << "frame,resident_after_append,resident_after_prune,candidates_total,"
           "fidelity_error,prune_latency_ns\n";
    std::uint64_t anchors = 0;
    for (const SlotStat& s : m.slots) {
        anchors += s.anchor_count;
    }
    for (const FrameRecord& r : m.per_frame) {
        out << r.frame << ',' << r.resident_after_append << ','
            << r.resident_after_prune << ','
            << (r.resident_after_prune > anchors ? r.resident_after_prune - anchors : 0)
            << ',';
        if (r.fidelity) {
            out << *r.fidelity;
        }
        out << ',';
        if (r.prune_ns) {
            out << *r.prune_ns;
        }
        out << '\n';
    }
    return out.str();
}

ordered_json compare_report_json(const CompareReport& r) {
    ordered_json j;
    j["schema_version"] = kReportSchemaVersion;
    j["kind"] = "compare";
    j["arms"] = r.arms;
    j["seeds"] = r.seeds;

    ordered_json rows = ordered_json::array();
    ordered_json timing_rows = ordered_json::array();
    for (const ArmSeedRow& row : r.rows) {
        ordered_json o;
        o["arm"] = row.arm;
        o["seed"] = row.seed;
        o["mean_fidelity"] = row.mean_fidelity;
        o["peak_resident_tokens"] = row.peak_resident_tokens;
        if (row.jaccard_vs_oracle) {
            o["jaccard_vs_oracle"] = *row.jaccard_vs_oracle;
        } else {
            o["jaccard_vs_oracle"] = nullptr;
        }
        ordered_json fid = ordered_json::array();
        for (const auto& [frame, err] : row.fidelity) {
            fid.push_back({{"frame", frame}, {"error", err}});
        }
        o["fidelity"] = fid;
        rows.push_back(std::move(o));

        ordered_json t;
        t["arm"] = row.arm;
        t["seed"] = row.seed;
        t["prune_latency"] = latency_json(row.prune_latency);
        t["tokens_per_sec"] = row.tokens_per_sec;
        timing_rows.push_back(std::move(t));
    }
    j["rows"] = rows;

    ordered_json aggs = ordered_json::array();
    ordered_json timing_aggs = ordered_json::array();
    for (const ArmAggregate& a : r.aggregates) {
        ordered_json o;
        o["arm"] = a.arm;
        o["mean_fidelity"] = a.mean_fidelity;
        o["mean_peak_resident"] = a.mean_peak_resident;
        if (a.mean_jaccard_vs_oracle) {
            o["mean_jaccard_vs_oracle"] = *a.mean_jaccard_vs_oracle;
        } else {
            o["mean_jaccard_vs_oracle"] = nullptr;
        }
        aggs.push_back(std::move(o));

        ordered_json t;
        t["arm"] = a.arm;
        t["mean_p50_latency_ns"] = a.mean_p50_latency_ns;
        timing_aggs.push_back(std::move(t));
    }
    j["aggregates"] = aggs;

    ordered_json wins = ordered_json::array();
    for (const PairWins& w : r.fidelity_wins) {
        wins.push_back({{"arm_a", w.arm_a},
                        {"arm_b", w.arm_b},
                        {"wins_a", w.wins_a},
                        {"wins_b", w.wins_b},
                        {"ties", w.ties}});
    }
    j["fidelity_wins"] = wins;
    j["notices"] = r.notices;

    ordered_json timing;
    timing["rows"] = timing_rows;
    timing["aggregates"] = timing_aggs;
    j["timing"] = timing;
    return j;
}

std::string compare_summary_csv(const CompareReport& r) {
    std::ostringstream out;
    out << "# rollkv-csv compare v" << kReportSchemaVersion << "\n";
    out << "arm,seed,mean_fidelity,peak_resident_tokens,jaccard_vs_oracle,"
           "p50_prune_ns,p95_prune_ns,max_prune_ns,tokens_per_sec\n";
    for (const ArmSeedRow& row : r.rows) {
        out << row.arm << ',' << row.seed << ',' << row.mean_fidelity << ','
            << row.peak_resident_tokens << ',';
        if (row.jaccard_vs_oracle) {
            out << *row.jaccard_vs_oracle;
        }
        out << ',' << row.prune_latency.p50_ns << ',' << row.prune_latency.p95_ns << ','
            << row.prune_latency.max_ns << ',' << row.tokens_per_sec << '\n';
    }
    return out.str();
}

std::string compare_frames_csv(const CompareReport& r) {
    std::ostringstream out;
    out << "# rollkv-csv compare-frames v" << kReportSchemaVersion << "\n";
    out << "arm,seed,frame,fidelity_error\n";
    for (const ArmSeedRow& row : r.rows) {
        for (const auto& [frame, err] : row.fidelity) {
            out << row.arm << ',' << row.seed << ',' << frame << ',' << err << '\n';
        }
    }
    return out.str();
}

ordered_json strip_timing(const ordered_json& report) {
    ordered_json j = report;
    j.erase("timing");
    return j;
}

}  // namespace rollkv
