#pragma once

#include <cstdint>
#include <ostream>
#include <span>
#include <stdexcept>
#include <vector>

#include "mzmesh/linalg.hpp"
#include "mzmesh/mzi.hpp"
#include "mzmesh/rng.hpp"
#include "mzmesh/topology.hpp"

namespace mzmesh {

// Zero-mean Gaussian phase offsets, redrawn per matrix multiplication.
struct NoiseConfig {
    double sigma_theta = 0.0;
    double sigma_phi = 0.0;
    std::uint64_t seed = 0;
};

// Linear nearest-neighbor thermal coupling with a single coefficient.
struct CrosstalkModel {
    double coefficient = 0.0;  // chi in [0, 1)
};

struct MeshState {
    MeshTopology topology;
    std::vector<MziPhases> phases;               // per placement id
    std::vector<double> input_shifter_phases;    // reck input shifters, else empty
    std::vector<MziImperfection> imperfections;  // per placement id
    CrosstalkModel crosstalk;
};

inline MeshState make_state(const MeshTopology& t) {
    MeshState s;
    s.topology = t;
    s.phases.assign(t.placements.size(), MziPhases{});
    s.imperfections.assign(t.placements.size(), MziImperfection{});
    s.input_shifter_phases.assign(t.input_phase_shifters, 0.0);
    return s;
}

inline void set_uniform_loss(MeshState& s, double loss_db) {
    for (auto& imp : s.imperfections) imp.loss_db = loss_db;
}

inline void set_all_phases(MeshState& s, const MziPhases& p) {
    for (auto& q : s.phases) q = p;
}

struct NoiseSample {
    std::vector<MziPhases> mzi_offsets;    // same length as phases, or empty
    std::vector<double> shifter_offsets;   // same length as input shifters, or empty
};

// One fresh offset per phase shifter, fully determined by the stream.
inline NoiseSample draw_noise(const NoiseConfig& cfg, const MeshTopology& t, const rng::Stream& stream) {
    NoiseSample ns;
    if (cfg.sigma_theta == 0.0 && cfg.sigma_phi == 0.0) return ns;
    const std::size_t n = t.placements.size();
    ns.mzi_offsets.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        ns.mzi_offsets[i].theta = cfg.sigma_theta * stream.gaussian(2 * i);
        ns.mzi_offsets[i].phi = cfg.sigma_phi * stream.gaussian(2 * i + 1);
    }
    ns.shifter_offsets.resize(t.input_phase_shifters);
    for (int i = 0; i < t.input_phase_shifters; ++i)
        ns.shifter_offsets[i] = cfg.sigma_phi * stream.gaussian(2 * n + i);
    return ns;
}

// Effective per-MZI phases after thermal crosstalk: each phase picks up
// chi times the sum of the same-kind phases of neighbors in the same or an
// adjacent stage with overlapping or adjacent waveguide pairs.
inline std::vector<MziPhases> apply_crosstalk(const MeshState& s) {
    const double chi = s.crosstalk.coefficient;
    if (chi == 0.0) return s.phases;
    if (!(chi >= 0.0 && chi < 1.0)) throw std::invalid_argument("CrosstalkModel: chi must be in [0,1)");
    std::vector<MziPhases> eff = s.phases;
    const auto& pl = s.topology.placements;
    for (std::size_t i = 0; i < pl.size(); ++i) {
        double acc_t = 0.0, acc_p = 0.0;
        for (std::size_t j = 0; j < pl.size(); ++j) {
            if (i == j) continue;
            if (std::abs(pl[i].stage - pl[j].stage) > 1) continue;
            if (std::abs(pl[i].top_wg - pl[j].top_wg) > 2) continue;
            acc_t += s.phases[j].theta;
            acc_p += s.phases[j].phi;
        }
        eff[i].theta += chi * acc_t;
        eff[i].phi += chi * acc_p;
    }
    return eff;
}

// Field adjustment on one waveguide just before a stage is applied; used by
// the calibration simulator for interferer injection and phase dithering.
struct FieldMask {
    int before_stage = 1;
    int wg = 1;
    Complex scale{1.0, 0.0};
    Complex add{0.0, 0.0};
};

namespace detail {

inline MziPhases effective_phase(const std::vector<MziPhases>& eff, const NoiseSample* noise, std::size_t id) {
    MziPhases p = eff[id];
    if (noise && !noise->mzi_offsets.empty()) {
        p.theta += noise->mzi_offsets[id].theta;
        p.phi += noise->mzi_offsets[id].phi;
    }
    return p;
}

inline void apply_shifters(const MeshState& s, const NoiseSample* noise, CVector& v) {
    for (std::size_t i = 0; i < s.input_shifter_phases.size(); ++i) {
        double phase = s.input_shifter_phases[i];
        if (noise && !noise->shifter_offsets.empty()) phase += noise->shifter_offsets[i];
        v[s.topology.port_index(static_cast<int>(i) + 1)] *= std::polar(1.0, phase);
    }
}

}  // namespace detail

// Apply the mesh to a field vector over the full port set (main + auxiliary).
inline CVector apply_mesh(const MeshState& s, CVector v, const NoiseSample* noise = nullptr,
                          std::span<const FieldMask> masks = {}) {
    const auto& t = s.topology;
    if (static_cast<int>(v.size()) != t.total_ports())
        throw std::invalid_argument("apply_mesh: input length must equal total port count");
    const auto eff = apply_crosstalk(s);
    detail::apply_shifters(s, noise, v);
    const auto stage_tab = t.stage_table();
    for (int stage = 1; stage < static_cast<int>(stage_tab.size()); ++stage) {
        for (const auto& mask : masks)
            if (mask.before_stage == stage) {
                auto& f = v[t.port_index(mask.wg)];
                f = f * mask.scale + mask.add;
            }
        for (int id : stage_tab[stage]) {
            const Block2 b = mzi_block(detail::effective_phase(eff, noise, id), s.imperfections[id]);
            const int ia = t.port_index(t.placements[id].top_wg);
            const Complex va = v[ia], vb = v[ia + 1];
            v[ia] = b.m00 * va + b.m01 * vb;
            v[ia + 1] = b.m10 * va + b.m11 * vb;
        }
    }
    return v;
}

// Full transfer matrix over the port set; unitary when lossless and noiseless.
inline CMatrix transfer_matrix(const MeshState& s, const NoiseSample* noise = nullptr) {
    const auto& t = s.topology;
    const std::size_t n = t.total_ports();
    CMatrix u = CMatrix::identity(n);
    const auto eff = apply_crosstalk(s);
    for (std::size_t i = 0; i < s.input_shifter_phases.size(); ++i) {
        double phase = s.input_shifter_phases[i];
        if (noise && !noise->shifter_offsets.empty()) phase += noise->shifter_offsets[i];
        const Complex f = std::polar(1.0, phase);
        const std::size_t r = t.port_index(static_cast<int>(i) + 1);
        for (std::size_t j = 0; j < n; ++j) u(r, j) *= f;
    }
    const auto stage_tab = t.stage_table();
    for (int stage = 1; stage < static_cast<int>(stage_tab.size()); ++stage) {
        for (int id : stage_tab[stage]) {
            const Block2 b = mzi_block(detail::effective_phase(eff, noise, id), s.imperfections[id]);
            const std::size_t ia = t.port_index(t.placements[id].top_wg);
            Complex* ra = u.row(ia);
            Complex* rb = u.row(ia + 1);
            for (std::size_t j = 0; j < n; ++j) {
                const Complex va = ra[j], vb = rb[j];
                ra[j] = b.m00 * va + b.m01 * vb;
                rb[j] = b.m10 * va + b.m11 * vb;
            }
        }
    }
    return u;
}

// One matrix multiplication with a fresh noise sample drawn from the stream.
inline CVector propagate(const MeshState& s, const CVector& input, const NoiseConfig& cfg,
                         const rng::Stream& stream) {
    const NoiseSample ns = draw_noise(cfg, s.topology, stream);
    return apply_mesh(s, input, &ns);
}

inline CVector propagate(const MeshState& s, const CVector& input) {
    return apply_mesh(s, input, nullptr);
}

// Per-stage field snapshots: fields[0] is the input after the input phase
// shifters, fields[k] the field after stage k.
struct ForwardTrace {
    CVector input;                 // raw input
    std::vector<CVector> fields;
};

inline ForwardTrace forward_trace(const MeshState& s, const CVector& input, const NoiseSample* noise = nullptr,
                                  std::span<const FieldMask> masks = {}) {
    const auto& t = s.topology;
    if (static_cast<int>(input.size()) != t.total_ports())
        throw std::invalid_argument("forward_trace: input length must equal total port count");
    ForwardTrace tr;
    tr.input = input;
    const auto eff = apply_crosstalk(s);
    CVector v = input;
    detail::apply_shifters(s, noise, v);
    const auto stage_tab = t.stage_table();
    tr.fields.reserve(stage_tab.size());
    tr.fields.push_back(v);
    for (int stage = 1; stage < static_cast<int>(stage_tab.size()); ++stage) {
        for (const auto& mask : masks)
            if (mask.before_stage == stage) {
                auto& f = v[t.port_index(mask.wg)];
                f = f * mask.scale + mask.add;
            }
        for (int id : stage_tab[stage]) {
            const Block2 b = mzi_block(detail::effective_phase(eff, noise, id), s.imperfections[id]);
            const int ia = t.port_index(t.placements[id].top_wg);
            const Complex va = v[ia], vb = v[ia + 1];
            v[ia] = b.m00 * va + b.m01 * vb;
            v[ia + 1] = b.m10 * va + b.m11 * vb;
        }
        tr.fields.push_back(v);
    }
    return tr;
}

// Gradients of a real scalar with respect to every phase, given the cotangent
// g of the output field under the convention dL = 2 Re <g, dv>. On return the
// cotangent has been pulled back to the raw input.
struct PhaseGrads {
    std::vector<double> d_theta, d_phi, d_shifters;
};

inline PhaseGrads backward(const MeshState& s, const ForwardTrace& trace, CVector& cotangent,
                           const NoiseSample* noise = nullptr) {
    const auto& t = s.topology;
    const auto eff = apply_crosstalk(s);
    PhaseGrads g;
    g.d_theta.assign(t.placements.size(), 0.0);
    g.d_phi.assign(t.placements.size(), 0.0);
    g.d_shifters.assign(s.input_shifter_phases.size(), 0.0);
    const auto stage_tab = t.stage_table();
    for (int stage = static_cast<int>(stage_tab.size()) - 1; stage >= 1; --stage) {
        const CVector& vin = trace.fields[stage - 1];
        for (int id : stage_tab[stage]) {
            const auto bd = mzi_block_derivs(detail::effective_phase(eff, noise, id), s.imperfections[id]);
            const int ia = t.port_index(t.placements[id].top_wg);
            const Complex va = vin[ia], vb = vin[ia + 1];
            const Complex ga = cotangent[ia], gb = cotangent[ia + 1];
            g.d_theta[id] = 2.0 * (std::conj(ga) * (bd.d_theta.m00 * va + bd.d_theta.m01 * vb) +
                                   std::conj(gb) * (bd.d_theta.m10 * va + bd.d_theta.m11 * vb))
                                      .real();
            g.d_phi[id] = 2.0 * (std::conj(ga) * (bd.d_phi.m00 * va + bd.d_phi.m01 * vb) +
                                 std::conj(gb) * (bd.d_phi.m10 * va + bd.d_phi.m11 * vb))
                                    .real();
            cotangent[ia] = std::conj(bd.value.m00) * ga + std::conj(bd.value.m10) * gb;
            cotangent[ia + 1] = std::conj(bd.value.m01) * ga + std::conj(bd.value.m11) * gb;
        }
    }
    for (std::size_t i = 0; i < s.input_shifter_phases.size(); ++i) {
        double phase = s.input_shifter_phases[i];
        if (noise && !noise->shifter_offsets.empty()) phase += noise->shifter_offsets[i];
        const int ia = t.port_index(static_cast<int>(i) + 1);
        const Complex f = std::polar(1.0, phase);
        g.d_shifters[i] = 2.0 * (std::conj(cotangent[ia]) * Complex(0.0, 1.0) * f * trace.input[ia]).real();
        cotangent[ia] = std::conj(f) * cotangent[ia];
    }
    return g;
}

// Transfer matrices exportable for external inspection: one line per row,
// re/im pairs separated by commas.
inline void write_matrix_csv(std::ostream& out, const CMatrix& m) {
    out.precision(17);
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) {
            if (j) out << ",";
            out << m(i, j).real() << "," << m(i, j).imag();
        }
        out << "\n";
    }
}

}  // namespace mzmesh
