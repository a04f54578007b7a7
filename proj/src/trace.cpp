// Copyright (C) 2026 The rollkv authors
// SPDX-License-Identifier: Apache-2.0

#include "rollkv/trace.hpp"

#include <bit>
#include <cstring>

namespace rollkv {

namespace {

void put_u32(std::vector<char>& buf, std::uint32_t v) {
    buf.push_back(static_cast<char>(v & 0xFF));
    buf.push_back(static_cast<char>((v >> 8) & 0xFF));
    buf.push_back(static_cast<char>((v >> 16) & 0xFF));
    buf.push_back(static_cast<char>((v >> 24) & 0xFF));
}

void put_f32_block(std::vector<char>& buf, const float* data, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        put_u32(buf, std::bit_cast<std::uint32_t>(data[i]));
    }
}

std::uint32_t get_u32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) |
           (static_cast<std::uint32_t>(p[3]) << 24);
}

void get_f32_block(const unsigned char* p, float* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = std::bit_cast<float>(get_u32(p + 4 * i));
    }
}

std::size_t frame_bytes(const TraceHeader& h) {
    const std::size_t per_slot =
        static_cast<std::size_t>(h.tokens) * (2ull * h.d_k + h.d_v) * 4;
    return 4 + static_cast<std::size_t>(h.layers) * h.heads * per_slot;
}

}  // namespace

TraceWriter::TraceWriter(const std::string& path, const TraceHeader& header)
    : m_out(path, std::ios::binary), m_header(header) {
    if (!m_out) {
        throw IoError("cannot open trace for writing: " + path);
    }
    std::vector<char> buf;
    buf.insert(buf.end(), TraceHeader::kMagic, TraceHeader::kMagic + 4);
    put_u32(buf, TraceHeader::kVersion);
    put_u32(buf, header.layers);
    put_u32(buf, header.heads);
    put_u32(buf, header.d_k);
    put_u32(buf, header.d_v);
    put_u32(buf, header.tokens);
    put_u32(buf, header.n_frames);
    m_out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

void TraceWriter::write_frame(const FramePair& frame) {
    const FrameKV& kv = frame.kv;
    const FrameQueries& q = frame.queries;
    if (kv.layers != m_header.layers || kv.heads != m_header.heads ||
        kv.d_k != m_header.d_k || kv.d_v != m_header.d_v ||
        kv.tokens != m_header.tokens || q.tokens != m_header.tokens ||
        q.d_k != m_header.d_k) {
        throw IoError("frame does not match trace header");
    }
    if (kv.frame_id != m_written || q.frame_id != m_written) {
        throw IoError("frames must be written in order");
    }
    std::vector<char> buf;
    buf.reserve(frame_bytes(m_header));
    put_u32(buf, kv.frame_id);
    const std::size_t k_block = static_cast<std::size_t>(m_header.tokens) * m_header.d_k;
    const std::size_t v_block = static_cast<std::size_t>(m_header.tokens) * m_header.d_v;
    for (std::uint32_t l = 0; l < m_header.layers; ++l) {
        for (std::uint32_t h = 0; h < m_header.heads; ++h) {
            put_f32_block(buf, kv.key_block(l, h).data(), k_block);
            put_f32_block(buf, kv.value_block(l, h).data(), v_block);
            put_f32_block(buf, q.query_block(l, h).data(), k_block);
        }
    }
    m_out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!m_out) {
        throw IoError("trace write failed");
    }
    ++m_written;
}

void TraceWriter::finish() {
    if (m_finished) {
        return;
    }
    if (m_written != m_header.n_frames) {
        throw IoError("frame count does not match trace header");
    }
    m_out.flush();
    if (!m_out) {
        throw IoError("trace write failed");
    }
    m_out.close();
    m_finished = true;
}

TraceReader::TraceReader(const std::string& path) : m_in(path, std::ios::binary) {
    if (!m_in) {
        throw IoError("cannot open trace: " + path);
    }
    unsigned char raw[32];
    m_in.read(reinterpret_cast<char*>(raw), sizeof(raw));
    if (m_in.gcount() != sizeof(raw) ||
        std::memcmp(raw, TraceHeader::kMagic, 4) != 0 ||
        get_u32(raw + 4) != TraceHeader::kVersion) {
        throw IoError("unrecognized trace");
    }
    m_header.layers = get_u32(raw + 8);
    m_header.heads = get_u32(raw + 12);
    m_header.d_k = get_u32(raw + 16);
    m_header.d_v = get_u32(raw + 20);
    m_header.tokens = get_u32(raw + 24);
    m_header.n_frames = get_u32(raw + 28);
    if (m_header.layers == 0 || m_header.heads == 0 || m_header.d_k == 0 ||
        m_header.d_v == 0 || m_header.tokens == 0) {
        throw IoError("unrecognized trace");
    }
}

std::optional<FramePair> TraceReader::next() {
    if (m_read >= m_header.n_frames) {
        return std::nullopt;
    }
    const std::size_t bytes = frame_bytes(m_header);
    std::vector<unsigned char> buf(bytes);
    m_in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(bytes));
    if (static_cast<std::size_t>(m_in.gcount()) != bytes) {
        throw IoError("short read at frame " + std::to_string(m_read));
    }

    FramePair out;
    FrameKV& kv = out.kv;
    FrameQueries& q = out.queries;
    kv.layers = q.layers = m_header.layers;
    kv.heads = q.heads = m_header.heads;
    kv.tokens = q.tokens = m_header.tokens;
    kv.d_k = q.d_k = m_header.d_k;
    kv.d_v = m_header.d_v;
    kv.frame_id = q.frame_id = get_u32(buf.data());

    const std::size_t slots = static_cast<std::size_t>(m_header.layers) * m_header.heads;
    const std::size_t k_block = static_cast<std::size_t>(m_header.tokens) * m_header.d_k;
    const std::size_t v_block = static_cast<std::size_t>(m_header.tokens) * m_header.d_v;
    kv.keys.resize(slots * k_block);
    kv.values.resize(slots * v_block);
    q.queries.resize(slots * k_block);

    const unsigned char* p = buf.data() + 4;
    for (std::size_t s = 0; s < slots; ++s) {
        get_f32_block(p, kv.keys.data() + s * k_block, k_block);
        p += 4 * k_block;
        get_f32_block(p, kv.values.data() + s * v_block, v_block);
        p += 4 * v_block;
        get_f32_block(p, q.queries.data() + s * k_block, k_block);
        p += 4 * k_block;
    }
    ++m_read;
    return out;
}

void write_trace(const std::string& path, const TraceHeader& header,
                 const std::vector<FramePair>& frames) {
    TraceWriter writer(path, header);
    for (const FramePair& f : frames) {
        writer.write_frame(f);
    }
    writer.finish();
}

std::pair<TraceHeader, std::vector<FramePair>> read_trace(const std::string& path) {
    TraceReader reader(path);
    std::vector<FramePair> frames;
    frames.reserve(reader.header().n_frames);
    while (auto f = reader.next()) {
        frames.push_back(std::move(*f));
    }
    return {reader.header(), std::move(frames)};
}

}  // namespace rollkv
