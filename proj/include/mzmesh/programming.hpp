#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "mzmesh/numeric.hpp"
#include "mzmesh/propagation.hpp"
#include "mzmesh/topology.hpp"

namespace mzmesh {

// Monitoring route for one MZI: with light on a single input and all other
// biases untouched, the input->output transmission follows
// A sin^2(theta/2) (or A cos^2 on a crossed route).
struct MonitoringPlan {
    int mzi_id = -1;
    int light_input_wg = 0;
    int detector_output_wg = 0;
    bool sin_sense = true;
};

inline std::optional<MonitoringPlan> monitoring_plan(const MeshTopology& t, int mzi_id) {
    const auto route = find_monitor_route(t, mzi_id);
    if (!route) return std::nullopt;
    MonitoringPlan p;
    p.mzi_id = mzi_id;
    p.light_input_wg = route->input_wg;
    p.detector_output_wg = route->output_wg;
    p.sin_sense = route->sin_sense();
    return p;
}

struct MonitorResult {
    double theta = 0.0;          // effective internal phase, wrapped to [0, 2 pi)
    double fit_amplitude = 0.0;  // A of the fitted model
    double fit_residual = 0.0;   // normalized rms residual of the fit
};

// Estimate the effective theta of one MZI by sweeping only its bias along the
// monitoring route and locating the transmission extremum. All other biases
// stay untouched; the target bias is restored by working on a copy.
inline MonitorResult monitor_theta(const MeshState& state, const MonitoringPlan& plan,
                                   int sweep_points = 64) {
    const auto& t = state.topology;
    if (plan.mzi_id < 0 || plan.mzi_id >= static_cast<int>(t.placements.size()))
        throw std::invalid_argument("monitor_theta: bad plan");
    MeshState s = state;
    CVector input(t.total_ports());
    input[t.port_index(plan.light_input_wg)] = 1.0;
    const int out = t.port_index(plan.detector_output_wg);

    const auto measure = [&](double bias) {
        s.phases[plan.mzi_id].theta = bias;
        return std::norm(apply_mesh(s, input)[out]);
    };

    double best_b = 0.0, best_p = measure(0.0);
    double peak = best_p;
    std::vector<double> samples(sweep_points);
    samples[0] = best_p;
    for (int i = 1; i < sweep_points; ++i) {
        const double b = 2.0 * numeric::pi * i / sweep_points;
        samples[i] = measure(b);
        peak = std::max(peak, samples[i]);
        if (samples[i] < best_p) { best_p = samples[i]; best_b = b; }
    }
    if (peak < 1e-18) throw std::runtime_error("monitor_theta: route is dark, no fit possible");
    const double step = 2.0 * numeric::pi / sweep_points;
    const double b_star = numeric::golden_minimize(measure, best_b - step, best_b + step, 1e-9);

    // At the located bias the effective phase sits at the model extremum, so
    // the current effective phase is the set bias minus the located one
    // (plus pi on a crossed route).
    const double extremum = plan.sin_sense ? 0.0 : numeric::pi;
    MonitorResult r;
    r.theta = numeric::wrap_2pi(state.phases[plan.mzi_id].theta - b_star + extremum);

    // Amplitude and residual of the model fit over the sweep samples.
    double num = 0.0, den = 0.0;
    for (int i = 0; i < sweep_points; ++i) {
        const double b = 2.0 * numeric::pi * i / sweep_points;
        const double eff = b - b_star + extremum;
        const double model = plan.sin_sense ? std::sin(eff / 2) * std::sin(eff / 2)
                                            : std::cos(eff / 2) * std::cos(eff / 2);
        num += samples[i] * model;
        den += model * model;
    }
    r.fit_amplitude = den > 0.0 ? num / den : 0.0;
    double ss = 0.0;
    for (int i = 0; i < sweep_points; ++i) {
        const double b = 2.0 * numeric::pi * i / sweep_points;
        const double eff = b - b_star + extremum;
        const double model = plan.sin_sense ? std::sin(eff / 2) * std::sin(eff / 2)
                                            : std::cos(eff / 2) * std::cos(eff / 2);
        const double d = samples[i] - r.fit_amplitude * model;
        ss += d * d;
    }
    r.fit_residual = peak > 0.0 ? std::sqrt(ss / sweep_points) / peak : 0.0;
    return r;
}

// Windowed read of the effective phase: locate the transmission minimum in a
// window around the bias where it is expected. The minimum location is
// first-order immune to crosstalk-induced drift of the route amplitude during
// the sweep, which corrupts phase reads away from the extremum on weak routes.
inline double monitor_theta_windowed(const MeshState& state, const MonitoringPlan& plan,
                                     double expected_theta, double half_width = 0.6,
                                     int window_points = 33) {
    const auto& t = state.topology;
    MeshState s = state;
    CVector input(t.total_ports());
    input[t.port_index(plan.light_input_wg)] = 1.0;
    const int out = t.port_index(plan.detector_output_wg);
    const auto measure = [&](double bias) {
        s.phases[plan.mzi_id].theta = bias;
        return std::norm(apply_mesh(s, input)[out]);
    };
    const double b0 = state.phases[plan.mzi_id].theta;
    const double extremum = plan.sin_sense ? 0.0 : numeric::pi;
    // predicted dark bias: effective phase crosses the extremum there
    const double center = b0 - expected_theta + extremum;
    const double b_star = numeric::grid_refine_minimize(measure, center - half_width, center + half_width,
                                                        window_points, 1e-9);
    return numeric::wrap_2pi(b0 - b_star + extremum);
}

struct ProgrammingResult {
    std::vector<MziPhases> phases;   // final applied biases
    std::vector<double> shifter_phases;
    int iterations = 0;
    double residual = 0.0;
    double t_prog_seconds = 0.0;
    bool converged = false;
};

// Closed-loop bias adjustment against monitored effective phases. Every MZI is
// monitored and corrected once per iteration round; rounds across MZIs run
// concurrently on hardware, so programming time is rounds x transit time.
inline ProgrammingResult program_ex_situ(const MeshState& initial, const std::vector<MziPhases>& target,
                                         int iterations_per_mzi, double transit_time_s = 2.2e-6,
                                         double tolerance = 1e-2) {
    const auto& t = initial.topology;
    if (target.size() != t.placements.size())
        throw std::invalid_argument("program_ex_situ: target size mismatch");
    std::vector<MonitoringPlan> plans;
    std::vector<int> inaccessible;
    for (int id = 0; id < static_cast<int>(t.placements.size()); ++id) {
        const auto p = monitoring_plan(t, id);
        if (p) plans.push_back(*p);
        else inaccessible.push_back(id);
    }
    if (!inaccessible.empty()) {
        std::ostringstream oss;
        oss << "program_ex_situ: not independently accessible on " << kind_name(t.kind) << ": MZI";
        for (int id : inaccessible) oss << " " << id;
        throw std::invalid_argument(oss.str());
    }

    MeshState s = initial;
    // Biases start at the externally calculated target values.
    s.phases = target;
    // Monitor search window: wide on the first round, then bounded by the
    // residual drift the applied corrections can still induce through
    // crosstalk, so that coupling-zero artifacts elsewhere on a route cannot
    // be mistaken for the model minimum.
    const double chi = s.crosstalk.coefficient;
    double window = 0.6;
    int rounds = 0;
    for (; rounds < iterations_per_mzi; ++rounds) {
        // Effective phi is corrected against its directly known value; theta
        // through the monitoring routes.
        const auto eff = apply_crosstalk(s);
        bool all_ok = true;
        double max_corr = 0.0;
        std::vector<MziPhases> next = s.phases;
        for (const auto& plan : plans) {
            const double monitored =
                monitor_theta_windowed(s, plan, target[plan.mzi_id].theta, window);
            const double err_t = numeric::wrap_pm_pi(monitored - target[plan.mzi_id].theta);
            const double err_p = numeric::wrap_pm_pi(eff[plan.mzi_id].phi - target[plan.mzi_id].phi);
            next[plan.mzi_id].theta -= err_t;
            next[plan.mzi_id].phi -= err_p;
            max_corr = std::max(max_corr, std::abs(err_t));
            if (std::abs(err_t) > tolerance || std::abs(err_p) > tolerance) all_ok = false;
        }
        window = std::clamp(20.0 * chi * max_corr + 0.005, 0.02, 0.6);
        if (all_ok) { ++rounds; break; }
        s.phases = std::move(next);
    }

    ProgrammingResult r;
    r.phases = s.phases;
    r.shifter_phases = s.input_shifter_phases;
    r.iterations = std::max(rounds, 1);
    const auto eff = apply_crosstalk(s);
    double worst = 0.0;
    for (std::size_t i = 0; i < eff.size(); ++i) {
        worst = std::max(worst, std::abs(numeric::wrap_pm_pi(eff[i].theta - target[i].theta)));
        worst = std::max(worst, std::abs(numeric::wrap_pm_pi(eff[i].phi - target[i].phi)));
    }
    r.residual = worst;
    r.converged = worst <= tolerance;
    r.t_prog_seconds = static_cast<double>(iterations_per_mzi) * transit_time_s;
    return r;
}

namespace detail {

// Frobenius distance between the realized main-port submatrix and the target,
// minimized over a diagonal of input-port phases. The block convention leaves
// the free diagonal of a mesh decomposition on the input side (the reason the
// triangular mesh carries input shifters), so this is exactly the quotient the
// phase settings can reach.
inline double aligned_distance(const CMatrix& realized, const CMatrix& target, std::vector<Complex>* align) {
    const std::size_t n = target.rows();
    double acc = 0.0;
    if (align) align->assign(n, Complex{1.0, 0.0});
    for (std::size_t j = 0; j < n; ++j) {
        Complex overlap{};
        double nr = 0.0, nt = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            overlap += std::conj(target(i, j)) * realized(i, j);
            nr += std::norm(realized(i, j));
            nt += std::norm(target(i, j));
        }
        const double mag = std::abs(overlap);
        acc += nr + nt - 2.0 * mag;
        if (align) (*align)[j] = mag > 0.0 ? overlap / mag : Complex{1.0, 0.0};
    }
    return std::sqrt(std::max(0.0, acc));
}

inline CMatrix main_submatrix(const MeshState& s) {
    const auto& t = s.topology;
    const CMatrix full = transfer_matrix(s);
    CMatrix u(t.n_main, t.n_main);
    for (int i = 0; i < t.n_main; ++i)
        for (int j = 0; j < t.n_main; ++j) u(i, j) = full(t.port_index(i + 1), t.port_index(j + 1));
    return u;
}

}  // namespace detail

// Adaptive gradient descent on the phase settings toward a target main-port
// matrix, with per-parameter moment estimates. A plain fixed-step descent
// stalls in the flat valleys of this landscape well short of the achievable
// optimum.
inline ProgrammingResult program_in_situ(const MeshState& initial, const CMatrix& target, int max_iterations,
                                         double transit_time_s = 2.2e-6, double learning_rate = 0.3,
                                         double tolerance = 1e-3) {
    const auto& t = initial.topology;
    if (target.rows() != static_cast<std::size_t>(t.n_main) || target.cols() != target.rows())
        throw std::invalid_argument("program_in_situ: target must be n_main x n_main");

    MeshState s = initial;
    const std::size_t n_mzi = t.placements.size();
    const int n = t.n_main;

    const auto eval = [&](const MeshState& st, std::vector<Complex>* align) {
        return detail::aligned_distance(detail::main_submatrix(st), target, align);
    };

    const std::size_t n_par = 2 * n_mzi + s.input_shifter_phases.size();
    std::vector<double> m1(n_par, 0.0), m2(n_par, 0.0);
    constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

    std::vector<Complex> align;
    double dist = eval(s, &align);
    MeshState best = s;
    double best_dist = dist;
    int used = 0;
    for (int it = 1; it <= max_iterations && dist > tolerance; ++it) {
        ++used;
        // Gradient of |U - T D|_F^2 with the current alignment D, column by
        // column through the adjoint machinery.
        std::vector<double> grad(n_par, 0.0);
        for (int col = 0; col < n; ++col) {
            CVector e(t.total_ports());
            e[t.port_index(col + 1)] = 1.0;
            const ForwardTrace tr = forward_trace(s, e);
            CVector cot(t.total_ports());
            for (int row = 0; row < n; ++row) {
                const Complex u = tr.fields.back()[t.port_index(row + 1)];
                cot[t.port_index(row + 1)] = u - align[col] * target(row, col);
            }
            const PhaseGrads pg = backward(s, tr, cot);
            for (std::size_t i = 0; i < n_mzi; ++i) {
                grad[2 * i] += pg.d_theta[i];
                grad[2 * i + 1] += pg.d_phi[i];
            }
            for (std::size_t i = 0; i < pg.d_shifters.size(); ++i) grad[2 * n_mzi + i] += pg.d_shifters[i];
        }
        for (std::size_t i = 0; i < n_par; ++i) {
            m1[i] = beta1 * m1[i] + (1.0 - beta1) * grad[i];
            m2[i] = beta2 * m2[i] + (1.0 - beta2) * grad[i] * grad[i];
            const double mh = m1[i] / (1.0 - std::pow(beta1, it));
            const double vh = m2[i] / (1.0 - std::pow(beta2, it));
            const double delta = learning_rate * mh / (std::sqrt(vh) + eps);
            if (i < 2 * n_mzi) {
                if (i % 2 == 0) s.phases[i / 2].theta -= delta;
                else s.phases[i / 2].phi -= delta;
            } else {
                s.input_shifter_phases[i - 2 * n_mzi] -= delta;
            }
        }
        dist = eval(s, &align);
        if (dist < best_dist) {
            best_dist = dist;
            best = s;
        }
    }
    s = std::move(best);
    dist = best_dist;

    ProgrammingResult r;
    r.phases = s.phases;
    r.shifter_phases = s.input_shifter_phases;
    r.iterations = used;
    r.residual = dist;
    r.converged = dist <= tolerance;
    r.t_prog_seconds = static_cast<double>(used) * transit_time_s;
    return r;
}

}  // namespace mzmesh
