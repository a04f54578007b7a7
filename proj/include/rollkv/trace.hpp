// Copyright (C) 2026 The rollkv authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rollkv/frame.hpp"

namespace rollkv {

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// RKV1 container header. All integers are little-endian uint32.
///
/// File layout:
///   "RKV1" | version | layers | heads | d_k | d_v | tokens | n_frames
/// then per frame:
///   frame_id, then for each layer, for each head:
///     K block (tokens*d_k f32 LE), V block (tokens*d_v), Q block (tokens*d_k)
struct TraceHeader {
    static constexpr char kMagic[4] = {'R', 'K', 'V', '1'};
    static constexpr std::uint32_t kVersion = 1;

    std::uint32_t layers = 0;
    std::uint32_t heads = 0;
    std::uint32_t d_k = 0;
    std::uint32_t d_v = 0;
    std::uint32_t tokens = 0;  // tokens per frame
    std::uint32_t n_frames = 0;

    bool operator==(const TraceHeader&) const = default;
};

class TraceWriter {
public:
    TraceWriter(const std::string& path, const TraceHeader& header);

    /// Frames must arrive in order with dimensions matching the header.
    void write_frame(const FramePair& frame);

    /// Flushes and verifies that exactly header.n_frames frames were written.
    void finish();

private:
    std::ofstream m_out;
    TraceHeader m_header;
    std::uint32_t m_written = 0;
    bool m_finished = false;
};

class TraceReader {
public:
    explicit TraceReader(const std::string& path);

    const TraceHeader& header() const { return m_header; }

    /// Next frame, or nullopt once header().n_frames frames were read.
    /// Throws IoError("short read at frame N") on truncation.
    std::optional<FramePair> next();

private:
    std::ifstream m_in;
    TraceHeader m_header;
    std::uint32_t m_read = 0;
};

/// Whole-file convenience wrappers.
void write_trace(const std::string& path, const TraceHeader& header,
                 const std::vector<FramePair>& frames);
std::pair<TraceHeader, std::vector<FramePair>> read_trace(const std::string& path);

}  // namespace rollkv
