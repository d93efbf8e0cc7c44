#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>

#include "mzmesh/linalg.hpp"
#include "mzmesh/numeric.hpp"

namespace mzmesh {

// theta: internal phase (sets the split), phi: external phase (sets the
// output phase). Raw values are kept as given; wrapping happens only where a
// canonical representative is needed.
struct MziPhases {
    double theta = 0.0;
    double phi = 0.0;
};

struct MziImperfection {
    double loss_db = 0.0;           // per-MZI insertion loss, both outputs equally
    double splitting_delta = 0.0;   // coupler power split = 0.5 + splitting_delta
};

struct VoltagePhaseModel {
    double v_pi = 2.0;        // volts for a pi shift
    double resolution = 0.01; // sweep step in volts
};

struct ThermalParams {
    double length;   // phase shifter length, meters
    double lambda0;  // wavelength, meters
    double dn_dt;    // thermo-optic coefficient, 1/K
};

inline MziPhases bar_state() { return {numeric::pi, 0.0}; }
inline MziPhases cross_state() { return {0.0, 0.0}; }

// 2x2 complex block, the hot-path representation during mesh assembly.
struct Block2 {
    Complex m00, m01, m10, m11;

    friend Block2 operator*(const Block2& a, const Block2& b) {
        return {a.m00 * b.m00 + a.m01 * b.m10, a.m00 * b.m01 + a.m01 * b.m11,
                a.m10 * b.m00 + a.m11 * b.m10, a.m10 * b.m01 + a.m11 * b.m11};
    }
};

inline void validate_imperfection(const MziImperfection& imp) {
    if (!(imp.loss_db >= 0.0))
        throw std::invalid_argument("MziImperfection: loss_db must be >= 0");
    if (!(std::abs(imp.splitting_delta) < 0.5))
        throw std::invalid_argument("MziImperfection: |splitting_delta| must be < 0.5");
}

namespace detail {

inline Block2 coupler(double split) {
    const double t = std::sqrt(1.0 - split);
    const Complex jk(0.0, std::sqrt(split));
    return {Complex(t, 0.0), jk, jk, Complex(t, 0.0)};
}

}  // namespace detail

// MZI transfer block: phi shifter on the top output, two couplers around the
// internal theta arm, a -j global-phase normalization so that the ideal case
// reduces to e^{j theta/2} [[e^{j phi} sin, e^{j phi} cos], [cos, -sin]](theta/2),
// and a uniform loss amplitude 10^(-loss_db/20).
inline Block2 mzi_block(const MziPhases& p, const MziImperfection& imp = {}) {
    validate_imperfection(imp);
    const double split = 0.5 + imp.splitting_delta;
    const Block2 c = detail::coupler(split);
    const Complex ejt = std::polar(1.0, p.theta);
    const Block2 inner{c.m00 * ejt, c.m01, c.m10 * ejt, c.m11};  // C * diag(e^{j theta}, 1)
    Block2 m = inner * c;
    const Complex ejp = std::polar(1.0, p.phi);
    m.m00 *= ejp;
    m.m01 *= ejp;
    const Complex amp = Complex(0.0, -1.0) * std::pow(10.0, -imp.loss_db / 20.0);
    m.m00 *= amp; m.m01 *= amp; m.m10 *= amp; m.m11 *= amp;
    return m;
}

struct BlockWithDerivs {
    Block2 value, d_theta, d_phi;
};

inline BlockWithDerivs mzi_block_derivs(const MziPhases& p, const MziImperfection& imp = {}) {
    validate_imperfection(imp);
    const double split = 0.5 + imp.splitting_delta;
    const Block2 c = detail::coupler(split);
    const Complex ejt = std::polar(1.0, p.theta);
    const Complex jejt = Complex(0.0, 1.0) * ejt;
    const Block2 inner{c.m00 * ejt, c.m01, c.m10 * ejt, c.m11};
    const Block2 dinner{c.m00 * jejt, Complex{}, c.m10 * jejt, Complex{}};
    Block2 m = inner * c;
    Block2 dt = dinner * c;
    const Complex ejp = std::polar(1.0, p.phi);
    const Complex jejp = Complex(0.0, 1.0) * ejp;
    Block2 dp{m.m00 * jejp, m.m01 * jejp, Complex{}, Complex{}};
    m.m00 *= ejp; m.m01 *= ejp;
    dt.m00 *= ejp; dt.m01 *= ejp;
    const Complex amp = Complex(0.0, -1.0) * std::pow(10.0, -imp.loss_db / 20.0);
    for (Block2* b : {&m, &dt, &dp}) {
        b->m00 *= amp; b->m01 *= amp; b->m10 *= amp; b->m11 *= amp;
    }
    return {m, dt, dp};
}

inline CMatrix mzi_transfer(const MziPhases& p, const MziImperfection& imp = {}) {
    const Block2 b = mzi_block(p, imp);
    CMatrix m(2, 2);
    m(0, 0) = b.m00; m(0, 1) = b.m01;
    m(1, 0) = b.m10; m(1, 1) = b.m11;
    return m;
}

// Quadratic thermo-optic law: phase = pi * (v / v_pi)^2.
inline double phase_from_voltage(double v, const VoltagePhaseModel& model) {
    if (!(model.v_pi > 0.0)) throw std::invalid_argument("VoltagePhaseModel: v_pi must be > 0");
    if (v < 0.0) throw std::invalid_argument("phase_from_voltage: negative voltage");
    const double r = v / model.v_pi;
    return numeric::pi * r * r;
}

inline double voltage_from_phase(double phase, const VoltagePhaseModel& model) {
    if (!(model.v_pi > 0.0)) throw std::invalid_argument("VoltagePhaseModel: v_pi must be > 0");
    if (phase < 0.0) throw std::invalid_argument("voltage_from_phase: negative phase");
    return model.v_pi * std::sqrt(phase / numeric::pi);
}

// Thermal phase error of a heated waveguide section: (2 pi L / lambda0) (dn/dT) dT.
inline double thermal_phase_error(double temperature_delta, const ThermalParams& p) {
    if (!(p.length > 0.0 && p.lambda0 > 0.0 && p.dn_dt > 0.0))
        throw std::invalid_argument("ThermalParams: all fields must be > 0");
    return (2.0 * numeric::pi * p.length / p.lambda0) * p.dn_dt * temperature_delta;
}

}  // namespace mzmesh
