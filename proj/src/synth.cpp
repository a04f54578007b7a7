// Copyright (C) 2026 The rollkv authors
// SPDX-License-Identifier: Apache-2.0

#include "rollkv/synth.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "rollkv/numerics.hpp"

namespace rollkv {

namespace {

/// Scales x to Euclidean norm target (in-place); degenerate inputs get a
/// deterministic axis direction instead.
void scale_to_norm(std::vector<double>& x, double target) {
    double norm = 0.0;
    for (double v : x) {
        norm += v * v;
    }
    norm = std::sqrt(norm);
    if (norm < 1e-12) {
        std::fill(x.begin(), x.end(), 0.0);
        x[0] = target;
        return;
    }
    const double f = target / norm;
    for (double& v : x) {
        v *= f;
    }
}

/// Random orthogonal matrix via modified Gram-Schmidt on gaussian rows.
std::vector<double> random_orthogonal(Rng& rng, std::size_t d) {
    std::vector<double> m(d * d);
    for (std::size_t r = 0; r < d; ++r) {
        for (;;) {
            std::vector<double> row = rng.gaussian_vec(d);
            for (std::size_t p = 0; p < r; ++p) {
                double proj = 0.0;
                for (std::size_t i = 0; i < d; ++i) {
                    proj += row[i] * m[p * d + i];
                }
                for (std::size_t i = 0; i < d; ++i) {
                    row[i] -= proj * m[p * d + i];
                }
            }
            double norm = 0.0;
            for (double v : row) {
                norm += v * v;
            }
            norm = std::sqrt(norm);
            if (norm > 1e-9) {
                for (std::size_t i = 0; i < d; ++i) {
                    m[r * d + i] = row[i] / norm;
                }
                break;
            }
        }
    }
    return m;
}

}  // namespace

void StreamSpec::validate() const {
    if (layers == 0 || heads == 0 || d_v == 0 || tokens_per_frame == 0) {
        throw std::invalid_argument("stream dimensions must be positive");
    }
    if (d_k < 2) {
        throw std::invalid_argument("d_k must be >= 2");
    }
    if (m_clusters < 1) {
        throw std::invalid_argument("m_clusters must be >= 1");
    }
    if (noise_sigma < 0.0 || value_noise < 0.0) {
        throw std::invalid_argument("noise must be non-negative");
    }
    if (novelty_rho < 0.0 || novelty_rho > 1.0) {
        throw std::invalid_argument("novelty_rho must be in [0,1]");
    }
    if (query_lookback < 0.0 || query_first_frame_bias < 0.0 ||
        query_lookback + query_first_frame_bias > 1.0) {
        throw std::invalid_argument("query mixture probabilities must be in [0,1]");
    }
    if (cluster_weight_decay <= 0.0 || cluster_weight_decay > 1.0) {
        throw std::invalid_argument("cluster_weight_decay must be in (0,1]");
    }
    if (feature_rms <= 0.0) {
        throw std::invalid_argument("feature_rms must be positive");
    }
    if (!m_clusters_per_layer.empty()) {
        if (m_clusters_per_layer.size() != layers) {
            throw std::invalid_argument("m_clusters_per_layer must have one entry per layer");
        }
        for (std::uint32_t m : m_clusters_per_layer) {
            if (m < 1) {
                throw std::invalid_argument("m_clusters must be >= 1");
            }
        }
    }
}

StreamGenerator::StreamGenerator(StreamSpec spec) : m_spec(std::move(spec)) {
    m_spec.validate();
    const std::size_t d_k = m_spec.d_k;
    m_slots.reserve(static_cast<std::size_t>(m_spec.layers) * m_spec.heads);
    for (std::uint32_t l = 0; l < m_spec.layers; ++l) {
        const std::uint32_t m0 = m_spec.m_clusters_per_layer.empty()
                                     ? m_spec.m_clusters
                                     : m_spec.m_clusters_per_layer[l];
        for (std::uint32_t h = 0; h < m_spec.heads; ++h) {
            SlotProcess sp(mix64(m_spec.seed, l, h));
            sp.clusters.reserve(m0);
            for (std::uint32_t c = 0; c < m0; ++c) {
                Cluster cl;
                cl.birth_dir = sp.rng.unit_vec(d_k);
                cl.birth_frame = 0;
                cl.value_proto = sp.rng.gaussian_vec(m_spec.d_v);
                sp.clusters.push_back(std::move(cl));
            }
            sp.plane_u = sp.rng.unit_vec(d_k);
            // second plane axis, orthogonalized against the first
            for (;;) {
                std::vector<double> w = sp.rng.gaussian_vec(d_k);
                double proj = 0.0;
                for (std::size_t i = 0; i < d_k; ++i) {
                    proj += w[i] * sp.plane_u[i];
                }
                for (std::size_t i = 0; i < d_k; ++i) {
                    w[i] -= proj * sp.plane_u[i];
                }
                double norm = 0.0;
                for (double v : w) {
                    norm += v * v;
                }
                norm = std::sqrt(norm);
                if (norm > 1e-9) {
                    for (double& v : w) {
                        v /= norm;
                    }
                    sp.plane_w = std::move(w);
                    break;
                }
            }
            // query map: cos(phi) I + sin(phi) * random orthogonal
            const double phi = m_spec.query_rotation_angle;
            std::vector<double> omega = random_orthogonal(sp.rng, d_k);
            sp.tilt.assign(d_k * d_k, 0.0);
            for (std::size_t r = 0; r < d_k; ++r) {
                for (std::size_t c = 0; c < d_k; ++c) {
                    sp.tilt[r * d_k + c] = std::sin(phi) * omega[r * d_k + c];
                }
                sp.tilt[r * d_k + r] += std::cos(phi);
            }
            m_slots.push_back(std::move(sp));
        }
    }
}

std::vector<double> StreamGenerator::position(const SlotProcess& sp, std::size_t cluster,
                                              std::uint32_t frame) const {
    const Cluster& cl = sp.clusters[cluster];
    const double theta =
        static_cast<double>(frame - cl.birth_frame) * m_spec.drift_angle;
    std::vector<double> pos = cl.birth_dir;
    if (theta != 0.0) {
        double a = 0.0;
        double b = 0.0;
        for (std::size_t i = 0; i < pos.size(); ++i) {
            a += pos[i] * sp.plane_u[i];
            b += pos[i] * sp.plane_w[i];
        }
        const double ra = a * std::cos(theta) - b * std::sin(theta);
        const double rb = a * std::sin(theta) + b * std::cos(theta);
        for (std::size_t i = 0; i < pos.size(); ++i) {
            pos[i] += (ra - a) * sp.plane_u[i] + (rb - b) * sp.plane_w[i];
        }
        scale_to_norm(pos, 1.0);
    }
    return pos;
}

FramePair StreamGenerator::next() {
    const std::uint32_t t = m_next_frame++;
    const std::size_t d_k = m_spec.d_k;
    const std::size_t d_v = m_spec.d_v;
    const std::size_t P = m_spec.tokens_per_frame;
    const double key_norm = m_spec.feature_rms * std::sqrt(static_cast<double>(d_k));
    const double value_norm = std::sqrt(static_cast<double>(d_v));

    FramePair out;
    out.kv.frame_id = t;
    out.kv.layers = m_spec.layers;
    out.kv.heads = m_spec.heads;
    out.kv.tokens = m_spec.tokens_per_frame;
    out.kv.d_k = m_spec.d_k;
    out.kv.d_v = m_spec.d_v;
    out.kv.keys.resize(m_slots.size() * P * d_k);
    out.kv.values.resize(m_slots.size() * P * d_v);
    out.queries.frame_id = t;
    out.queries.layers = m_spec.layers;
    out.queries.heads = m_spec.heads;
    out.queries.tokens = m_spec.tokens_per_frame;
    out.queries.d_k = m_spec.d_k;
    out.queries.queries.resize(m_slots.size() * P * d_k);

    for (std::size_t s = 0; s < m_slots.size(); ++s) {
        SlotProcess& sp = m_slots[s];
        if (t > 0 && sp.rng.uniform() < m_spec.novelty_rho) {
            Cluster cl;
            cl.birth_dir = sp.rng.unit_vec(d_k);
            cl.birth_frame = t;
            cl.value_proto = sp.rng.gaussian_vec(d_v);
            sp.clusters.push_back(std::move(cl));
        }
        const std::size_t m = sp.clusters.size();
        std::vector<double> weights(m);
        double w = 1.0;
        for (std::size_t c = 0; c < m; ++c) {
            weights[c] = w;
            w *= m_spec.cluster_weight_decay;
        }

        float* kout = out.kv.keys.data() + s * P * d_k;
        float* vout = out.kv.values.data() + s * P * d_v;
        for (std::size_t p = 0; p < P; ++p) {
            const std::size_t ci = sp.rng.weighted(weights);
            std::vector<double> dir = position(sp, ci, t);
            for (std::size_t i = 0; i < d_k; ++i) {
                dir[i] += m_spec.noise_sigma * sp.rng.gaussian();
            }
            scale_to_norm(dir, key_norm);
            for (std::size_t i = 0; i < d_k; ++i) {
                kout[p * d_k + i] = static_cast<float>(dir[i]);
            }
            std::vector<double> val = sp.clusters[ci].value_proto;
            for (std::size_t i = 0; i < d_v; ++i) {
                val[i] += m_spec.value_noise * sp.rng.gaussian();
            }
            scale_to_norm(val, value_norm);
            for (std::size_t i = 0; i < d_v; ++i) {
                vout[p * d_v + i] = static_cast<float>(val[i]);
            }
        }

        float* qout = out.queries.queries.data() + s * P * d_k;
        std::vector<double> tilted(d_k);
        for (std::size_t p = 0; p < P; ++p) {
            const double r = sp.rng.uniform();
            std::uint32_t ref;
            if (r < m_spec.query_first_frame_bias) {
                ref = 0;
            } else if (r < m_spec.query_first_frame_bias + m_spec.query_lookback) {
                ref = static_cast<std::uint32_t>(sp.rng.bounded(t + 1));
            } else {
                ref = t;
            }
            std::size_t alive = 0;
            for (const Cluster& cl : sp.clusters) {
                alive += cl.birth_frame <= ref ? 1 : 0;
            }
            std::size_t pick = sp.rng.bounded(alive);
            std::size_t ci = 0;
            for (std::size_t c = 0; c < m; ++c) {
                if (sp.clusters[c].birth_frame <= ref) {
                    if (pick == 0) {
                        ci = c;
                        break;
                    }
                    --pick;
                }
            }
            std::vector<double> dir = position(sp, ci, ref);
            for (std::size_t i = 0; i < d_k; ++i) {
                dir[i] += m_spec.noise_sigma * sp.rng.gaussian();
            }
            for (std::size_t i = 0; i < d_k; ++i) {
                double acc = 0.0;
                for (std::size_t j = 0; j < d_k; ++j) {
                    acc += sp.tilt[i * d_k + j] * dir[j];
                }
                tilted[i] = acc;
            }
            scale_to_norm(tilted, key_norm);
            for (std::size_t i = 0; i < d_k; ++i) {
                qout[p * d_k + i] = static_cast<float>(tilted[i]);
            }
        }
    }
    return out;
}

double adjacent_frame_similarity(const FrameKV& prev, const FrameKV& cur) {
    if (prev.layers != cur.layers || prev.heads != cur.heads || prev.d_k != cur.d_k ||
        prev.tokens == 0 || cur.tokens == 0) {
        throw std::invalid_argument("frame dimension mismatch");
    }
    const std::size_t d_k = cur.d_k;
    double slot_acc = 0.0;
    const std::size_t slots = static_cast<std::size_t>(cur.layers) * cur.heads;
    for (std::uint32_t l = 0; l < cur.layers; ++l) {
        for (std::uint32_t h = 0; h < cur.heads; ++h) {
            const auto pk = prev.key_block(l, h);
            const auto ck = cur.key_block(l, h);
            double token_acc = 0.0;
            for (std::size_t i = 0; i < cur.tokens; ++i) {
                const auto tok = ck.subspan(i * d_k, d_k);
                double best = -1.0;
                for (std::size_t j = 0; j < prev.tokens; ++j) {
                    best = std::max(best, cos_sim(tok, pk.subspan(j * d_k, d_k)));
                }
                token_acc += best;
            }
            slot_acc += token_acc / static_cast<double>(cur.tokens);
        }
    }
    return slot_acc / static_cast<double>(slots);
}

double adjacent_frame_similarity(const std::vector<FrameKV>& frames, std::size_t t) {
    if (t == 0) {
        throw std::invalid_argument("t must be >= 1");
    }
    if (t >= frames.size()) {
        throw std::invalid_argument("frame index out of range");
    }
    return adjacent_frame_similarity(frames[t - 1], frames[t]);
}

double mean_adjacent_similarity(const StreamSpec& spec) {
    StreamGenerator gen(spec);
    if (spec.n_frames < 2) {
        throw std::invalid_argument("need at least two frames");
    }
    FrameKV prev = gen.next().kv;
    double acc = 0.0;
    for (std::uint32_t t = 1; t < spec.n_frames; ++t) {
        FrameKV cur = gen.next().kv;
        acc += adjacent_frame_similarity(prev, cur);
        prev = std::move(cur);
    }
    return acc / static_cast<double>(spec.n_frames - 1);
}

}  // namespace rollkv
