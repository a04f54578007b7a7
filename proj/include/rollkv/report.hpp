// Copyright (C) 2026 The rollkv authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

#include <nlohmann/json_fwd.hpp>

#include "rollkv/harness.hpp"

namespace rollkv {

/// Bumped whenever a JSON key or CSV column changes.
inline constexpr int kReportSchemaVersion = 1;

/// Full run report. Wall-clock-dependent values live exclusively under the
/// "timing" key so deterministic comparisons can strip them.
nlohmann::ordered_json run_report_json(const RunConfig& config, const RunMetrics& metrics);

/// Per-frame CSV. Leading "# rollkv-csv run v1" comment line, then a header
/// row: frame,resident_after_append,resident_after_prune,candidates_total,
/// fidelity_error,prune_latency_ns. The latency column is wall-clock.
std::string run_report_csv(const RunMetrics& metrics);

nlohmann::ordered_json compare_report_json(const CompareReport& report);

/// Summary CSV: one row per (arm, seed).
std::string compare_summary_csv(const CompareReport& report);

/// Paired per-frame CSV: arm,seed,frame,fidelity_error.
std::string compare_frames_csv(const CompareReport& report);

/// Returns a copy with every wall-clock-dependent subtree removed.
nlohmann::ordered_json strip_timing(const nlohmann::ordered_json& report);

nlohmann::ordered_json engine_config_json(const EngineConfig& engine);
nlohmann::ordered_json stream_spec_json(const StreamSpec& spec);

}  // namespace rollkv
