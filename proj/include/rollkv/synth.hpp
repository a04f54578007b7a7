// Copyright (C) 2026 The rollkv authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "rollkv/frame.hpp"
#include "rollkv/rng.hpp"

namespace rollkv {

/// Parameters of the synthetic camera-drift key/value stream.
///
/// Per (layer, head) slot the generator maintains a set of unit cluster
/// directions. Each frame the directions rotate by drift_angle inside a
/// fixed random plane, and with probability novelty_rho a new uniformly
/// random direction spawns. Key tokens sample clusters with geometrically
/// decaying weights (cluster_weight_decay), so the oldest cluster acts as a
/// dominant background and later ones as rare landmarks, and are emitted at
/// radius feature_rms * sqrt(d_k) (component RMS = feature_rms) around the
/// sampled direction. Values are the cluster's value prototype plus noise,
/// scaled to unit RMS: near-duplicate keys carry near-duplicate content.
///
/// Queries come from the same cluster process under a fixed random tilt of
/// query_rotation_angle: with probability query_first_frame_bias a query
/// references the frame-0 state of the process, with query_lookback a
/// uniformly random past state, otherwise the current one. Query cluster
/// choice is uniform over the clusters alive at the referenced time.
struct StreamSpec {
    std::uint32_t layers = 4;
    std::uint32_t heads = 2;
    std::uint32_t d_k = 32;
    std::uint32_t d_v = 32;
    std::uint32_t tokens_per_frame = 16;
    std::uint32_t n_frames = 200;

    std::uint32_t m_clusters = 4;
    double drift_angle = 0.01;   // radians per frame
    double noise_sigma = 0.03;   // key direction noise
    double novelty_rho = 0.02;   // per-frame new-cluster probability
    std::uint64_t seed = 1;

    double cluster_weight_decay = 0.6;  // key cluster sampling weights, decay^i
    double query_lookback = 0.5;        // P(query references a random past state)
    double query_first_frame_bias = 0.0;  // P(query references the frame-0 state)
    double value_noise = 0.1;
    double feature_rms = 2.0;                  // key/query component RMS
    double query_rotation_angle = 0.7853981633974483;  // 45 degrees

    /// Per-layer cluster count overrides; empty = m_clusters everywhere.
    std::vector<std::uint32_t> m_clusters_per_layer;

    void validate() const;
};

/// Deterministic stream generator; frames are a pure function of the spec.
/// next() can be called beyond n_frames (the stream process is unbounded);
/// n_frames is the length consumers materialize.
class StreamGenerator {
public:
    explicit StreamGenerator(StreamSpec spec);

    FramePair next();

    const StreamSpec& spec() const { return m_spec; }
    std::uint32_t frames_generated() const { return m_next_frame; }

private:
    struct Cluster {
        std::vector<double> birth_dir;  // unit, d_k
        std::uint32_t birth_frame = 0;
        std::vector<double> value_proto;  // d_v
    };
    struct SlotProcess {
        Rng rng;
        std::vector<Cluster> clusters;
        std::vector<double> plane_u, plane_w;  // drift plane, orthonormal
        std::vector<double> tilt;              // d_k x d_k query map, row-major
        explicit SlotProcess(std::uint64_t seed) : rng(seed) {}
    };

    std::vector<double> position(const SlotProcess& sp, std::size_t cluster,
                                 std::uint32_t frame) const;

    StreamSpec m_spec;
    std::vector<SlotProcess> m_slots;  // layers*heads
    std::uint32_t m_next_frame = 0;
};

/// Mean over frame t's tokens of the best cosine match against any token of
/// frame t-1 in the same slot, averaged over slots. The stream redundancy
/// observable. Throws when t = 0.
double adjacent_frame_similarity(const std::vector<FrameKV>& frames, std::size_t t);

/// Pairwise form over two consecutive frames.
double adjacent_frame_similarity(const FrameKV& prev, const FrameKV& cur);

/// Mean adjacent-frame similarity over a freshly generated stream of
/// spec.n_frames frames.
double mean_adjacent_similarity(const StreamSpec& spec);

}  // namespace rollkv
