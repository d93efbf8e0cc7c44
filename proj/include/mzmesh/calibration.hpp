#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <deque>
#include <limits>
#include <optional>
#include <set>
#include <stdexcept>
#include <vector>

#include "mzmesh/mzi.hpp"
#include "mzmesh/numeric.hpp"
#include "mzmesh/propagation.hpp"
#include "mzmesh/rng.hpp"
#include "mzmesh/topology.hpp"

namespace mzmesh {

// Optical powers at the two inputs of an MZI under calibration, with the
// relative phase of the interferer. Powers are in dBm; -inf marks a dark port.
struct InterferenceCondition {
    double p_top_dbm = 0.0;
    double p_bottom_dbm = -std::numeric_limits<double>::infinity();
    double delta_in = 0.0;
};

inline double interference_power_ratio(const InterferenceCondition& c) {
    if (!std::isfinite(c.p_top_dbm)) throw std::invalid_argument("InterferenceCondition: p_top must be finite");
    if (c.p_bottom_dbm == -std::numeric_limits<double>::infinity()) return 0.0;
    return std::pow(10.0, (c.p_bottom_dbm - c.p_top_dbm) / 10.0);
}

// Top-in to top-out transmission of one MZI with an interferer on the bottom
// input: |sin(theta/2) + cos(theta/2) sqrt(r) e^{j delta}|^2. A dark bottom
// port reduces it to sin^2(theta/2).
inline double transmission(double theta, const InterferenceCondition& cond) {
    const double r = interference_power_ratio(cond);
    const Complex v = std::sin(theta / 2) +
                      std::cos(theta / 2) * std::sqrt(r) * std::polar(1.0, cond.delta_in);
    return std::norm(v);
}

// Mean transmission over a window of the interferer phase, trapezoid rule.
// Over a full 2 pi window the cross term cancels and the minimum returns to
// theta = 0 for any interferer power.
inline double averaged_transmission(double theta, const InterferenceCondition& base, double span,
                                    int quadrature_points = 0) {
    if (!(span > 0.0)) throw std::invalid_argument("averaged_transmission: span must be > 0");
    if (quadrature_points <= 0)
        quadrature_points = std::max(720, static_cast<int>(std::ceil(720.0 * span / (2.0 * numeric::pi))));
    double acc = 0.0;
    InterferenceCondition c = base;
    for (int i = 0; i <= quadrature_points; ++i) {
        c.delta_in = base.delta_in + span * i / quadrature_points;
        const double w = (i == 0 || i == quadrature_points) ? 0.5 : 1.0;
        acc += w * transmission(theta, c);
    }
    return acc / quadrature_points;
}

// Two-MZI cascade: the MZI under calibration feeds the top input of a second
// one whose bottom input carries an interferer of fixed power and phase. The
// power reaching the second stage scales as sin^2(theta1/2) and its field
// phase advances with theta1/2, both of which shift the located extremum.
inline double two_stage_transmission(double theta1, double theta2, const InterferenceCondition& cond2) {
    const double r2 = interference_power_ratio(cond2);
    const Complex top = std::sin(theta1 / 2) * std::polar(1.0, theta1 / 2) * std::sin(theta2 / 2);
    const Complex bottom = std::cos(theta2 / 2) * std::sqrt(r2) * std::polar(1.0, cond2.delta_in);
    return std::norm(top + bottom);
}

// Measurement points for a calibration sweep at the given voltage resolution.
// One dimension scans the full span; the two-dimensional variant multiplies by
// a 4-point interferer-phase quadrature, which integrates the single-harmonic
// cross term exactly.
inline std::size_t measurement_point_count(const VoltagePhaseModel& model, int dims,
                                           double span_volts = 4.0) {
    if (!(model.resolution > 0.0)) throw std::invalid_argument("VoltagePhaseModel: resolution must be > 0");
    if (dims != 1 && dims != 2) throw std::invalid_argument("measurement_point_count: dims must be 1 or 2");
    if (span_volts < 0.0) throw std::invalid_argument("measurement_point_count: negative span");
    const std::size_t per_axis = static_cast<std::size_t>(std::ceil(span_volts / model.resolution - 1e-9));
    return dims == 1 ? per_axis : per_axis * 4;
}

enum class MziSetting { cross, bar, free_state };

enum class StepClass { exact, exact_input_approx_downstream, averaging_required };

inline const char* step_class_name(StepClass c) {
    switch (c) {
        case StepClass::exact: return "exact";
        case StepClass::exact_input_approx_downstream: return "exact-input-approx-downstream";
        case StepClass::averaging_required: return "averaging-required";
    }
    return "?";
}

struct CalibrationStep {
    int mzi_id = -1;
    int light_input_wg = 0;
    int detector_output_wg = 0;
    bool sin_sense = true;  // extremum model: sin^2(theta/2) if true, cos^2 otherwise
    std::vector<std::pair<int, MziSetting>> required_states;
    std::vector<int> upstream_ids;
    std::vector<int> downstream_ids;
    std::vector<std::pair<int, bool>> null_inputs;  // (mzi id, top input?) expected dark
    std::vector<int> dark_input_wgs;
    int interferer_wg = 0;  // waveguide dithered for averaging / used for injection
    StepClass classification = StepClass::exact;
};

struct CalibrationPlan {
    MeshKind kind{};
    int n = 0;
    std::vector<CalibrationStep> steps;
};

namespace detail {

struct FeedHop {
    int mzi_id;
    bool enter_top;
    bool exit_top;
    MziSetting setting() const { return enter_top == exit_top ? MziSetting::bar : MziSetting::cross; }
};

struct FeedRoute {
    int input_wg = 0;
    bool target_entry_top = false;
    std::vector<FeedHop> hops;
};

// Shortest light path from some input port to one input of the target,
// passing only through MZIs in `allowed` (each set to bar or cross so the
// light stays on a single trajectory). Deterministic tie-breaking.
inline std::optional<FeedRoute> find_feed_route(const MeshTopology& t, int target,
                                                const std::vector<bool>& allowed) {
    const auto& tp = t.placements[target];
    struct Node { int wg, stage; std::vector<FeedHop> hops; int input_wg; };
    std::deque<Node> queue;
    for (int w = t.min_wg; w <= t.max_wg; ++w) queue.push_back({w, 0, {}, w});
    std::set<std::pair<int, int>> seen;
    while (!queue.empty()) {
        Node cur = queue.front();
        queue.pop_front();
        if (!seen.insert({cur.wg, cur.stage}).second) continue;
        const int nxt = next_mzi_on_wg(t, cur.wg, cur.stage);
        if (nxt < 0) continue;
        const auto& np = t.placements[nxt];
        const bool enter_top = cur.wg == np.top_wg;
        if (nxt == target) {
            FeedRoute r;
            r.input_wg = cur.input_wg;
            r.target_entry_top = enter_top;
            r.hops = std::move(cur.hops);
            return r;
        }
        if (np.stage >= tp.stage) continue;
        if (!allowed[nxt]) continue;
        for (bool exit_top : {true, false}) {
            Node n2 = cur;
            n2.wg = exit_top ? np.top_wg : np.top_wg + 1;
            n2.stage = np.stage;
            n2.hops.push_back({nxt, enter_top, exit_top});
            queue.push_back(std::move(n2));
        }
    }
    return std::nullopt;
}

struct DownstreamRoute {
    bool null_clean = false;  // every subsequent MZI keeps its off-path input dark
    bool exit_top = false;
    int output_wg = 0;
    std::vector<FeedHop> hops;  // traversed MZIs, entered on the path side
};

// Path from the target to an output port along which every traversed MZI has
// its off-path input dark, assuming worst-case spreading from the target's two
// outputs (the swept MZI lights both). Falls back to riding the entry-side
// waveguide straight to its output when no clean path exists.
inline DownstreamRoute find_downstream_route(const MeshTopology& t, int target, bool entry_top) {
    const auto& tp = t.placements[target];
    const auto cone = light_cone(t, {}, target);
    struct Node { int wg, stage; bool from_top; std::vector<FeedHop> hops; };
    std::vector<Node> stack{{tp.top_wg, tp.stage, true, {}}, {tp.top_wg + 1, tp.stage, false, {}}};
    std::set<std::pair<int, int>> seen;
    while (!stack.empty()) {
        Node cur = stack.back();
        stack.pop_back();
        if (!seen.insert({cur.wg, cur.stage}).second) continue;
        const int nxt = next_mzi_on_wg(t, cur.wg, cur.stage);
        if (nxt < 0) {
            DownstreamRoute r;
            r.null_clean = true;
            r.exit_top = cur.from_top;
            r.output_wg = cur.wg;
            r.hops = std::move(cur.hops);
            return r;
        }
        const auto& np = t.placements[nxt];
        const auto [la, lb] = cone.mzi_inputs[nxt];
        const bool enter_top = cur.wg == np.top_wg;
        const bool off_lit = enter_top ? lb : la;
        if (off_lit) continue;
        for (bool exit_top : {true, false}) {
            Node n2 = cur;
            n2.wg = exit_top ? np.top_wg : np.top_wg + 1;
            n2.stage = np.stage;
            n2.hops.push_back({nxt, enter_top, exit_top});
            stack.push_back(std::move(n2));
        }
    }
    // No clean path: ride the entry-side waveguide straight through.
    DownstreamRoute r;
    r.null_clean = false;
    r.exit_top = entry_top;
    int wg = entry_top ? tp.top_wg : tp.top_wg + 1;
    int stage = tp.stage;
    for (;;) {
        const int nxt = next_mzi_on_wg(t, wg, stage);
        if (nxt < 0) break;
        const auto& np = t.placements[nxt];
        r.hops.push_back({nxt, wg == np.top_wg, wg == np.top_wg});
        stage = np.stage;
    }
    r.output_wg = wg;
    return r;
}

inline CalibrationStep make_step(const MeshTopology& t, int target, const FeedRoute& feed,
                                 const DownstreamRoute& down) {
    CalibrationStep step;
    step.mzi_id = target;
    step.light_input_wg = feed.input_wg;
    step.detector_output_wg = down.output_wg;
    step.sin_sense = feed.target_entry_top == down.exit_top;
    for (const auto& hop : feed.hops) {
        step.required_states.push_back({hop.mzi_id, hop.setting()});
        step.upstream_ids.push_back(hop.mzi_id);
    }
    for (const auto& hop : down.hops) {
        step.required_states.push_back({hop.mzi_id, hop.setting()});
        step.downstream_ids.push_back(hop.mzi_id);
    }
    step.null_inputs.push_back({target, !feed.target_entry_top});
    if (down.null_clean)
        for (const auto& hop : down.hops) step.null_inputs.push_back({hop.mzi_id, !hop.enter_top});
    for (int w = t.min_wg; w <= t.max_wg; ++w)
        if (w != feed.input_wg) step.dark_input_wgs.push_back(w);
    const auto& tp = t.placements[target];
    step.interferer_wg = feed.target_entry_top ? tp.top_wg + 1 : tp.top_wg;
    step.classification = down.null_clean ? StepClass::exact : StepClass::exact_input_approx_downstream;
    return step;
}

// Sequential null-input planner used for the triangular-family meshes: at each
// round, calibrate every MZI whose feed trajectory runs through
// already-calibrated MZIs only.
inline CalibrationPlan plan_sequential(const MeshTopology& t) {
    CalibrationPlan plan{t.kind, t.n_main, {}};
    const std::size_t n = t.placements.size();
    std::vector<bool> calibrated(n, false);
    std::size_t done = 0;
    while (done < n) {
        bool progressed = false;
        for (std::size_t id = 0; id < n; ++id) {
            if (calibrated[id]) continue;
            const auto feed = find_feed_route(t, static_cast<int>(id), calibrated);
            if (!feed) continue;
            const auto down = find_downstream_route(t, static_cast<int>(id), feed->target_entry_top);
            plan.steps.push_back(make_step(t, static_cast<int>(id), *feed, down));
            calibrated[id] = true;
            ++done;
            progressed = true;
        }
        if (!progressed) throw std::logic_error("calibration_plan: no viable route for remaining MZIs");
    }
    return plan;
}

// Clements-style plan: last stage first so every later stage is already
// calibrated and can be set to an exact bar, with the input-side interference
// removed by full-period averaging. First-stage MZIs see their input ports
// directly and need no averaging.
inline CalibrationPlan plan_rectangular(const MeshTopology& t) {
    CalibrationPlan plan{t.kind, t.n_main, {}};
    const auto stage_tab = t.stage_table();
    for (int stage = static_cast<int>(stage_tab.size()) - 1; stage >= 1; --stage) {
        for (int id : stage_tab[stage]) {
            const auto& tp = t.placements[id];
            CalibrationStep step;
            step.mzi_id = id;
            step.light_input_wg = tp.top_wg;
            step.detector_output_wg = tp.top_wg;
            step.sin_sense = true;
            step.interferer_wg = tp.top_wg + 1;
            // everything after this stage is calibrated; set it all to bar so
            // both target outputs ride straight to separate output ports
            for (int s2 = stage + 1; s2 < static_cast<int>(stage_tab.size()); ++s2)
                for (int id2 : stage_tab[s2]) {
                    step.required_states.push_back({id2, MziSetting::bar});
                    step.downstream_ids.push_back(id2);
                }
            // nominal bars upstream keep the probe mostly on its waveguide
            for (int s2 = 1; s2 < stage; ++s2)
                for (int id2 : stage_tab[s2]) step.required_states.push_back({id2, MziSetting::bar});
            for (int w = t.min_wg; w <= t.max_wg; ++w)
                if (w != step.light_input_wg) step.dark_input_wgs.push_back(w);
            step.null_inputs.push_back({id, false});
            step.classification = stage == 1 ? StepClass::exact : StepClass::averaging_required;
            plan.steps.push_back(step);
        }
    }
    return plan;
}

}  // namespace detail

inline CalibrationPlan calibration_plan(const MeshTopology& t) {
    return t.kind == MeshKind::clements ? detail::plan_rectangular(t) : detail::plan_sequential(t);
}

struct CalibrationSimOptions {
    VoltagePhaseModel vpm{};
    double offset_scale = 0.15 * numeric::pi;  // hidden offsets drawn uniformly in +-scale
    std::uint64_t seed = 1;
    bool use_averaging = true;
    int averaging_points = 16;
    // Optional interferer injected at the target's off input, for studying the
    // error of calibrating against residual light.
    double injected_power_dbm = -std::numeric_limits<double>::infinity();
    double injected_phase = 0.0;
};

struct CalibrationErrorEntry {
    int mzi_id = -1;
    double true_offset = 0.0;
    double recovered_offset = 0.0;
    double abs_error = 0.0;
    bool ok = true;
};

namespace detail {

inline double sweep_detector_power(const MeshState& base, const CalibrationStep& step,
                                   const CalibrationSimOptions& opt, double target_effective_theta,
                                   bool dither, double inj_amp) {
    const auto& t = base.topology;
    MeshState s = base;  // cheap at desk scale
    s.phases[step.mzi_id].theta = target_effective_theta;
    CVector input(t.total_ports());
    input[t.port_index(step.light_input_wg)] = 1.0;
    const int out = t.port_index(step.detector_output_wg);
    const int stage = t.placements[step.mzi_id].stage;
    const int points = dither ? std::max(2, opt.averaging_points) : 1;
    double acc = 0.0;
    for (int i = 0; i < points; ++i) {
        const double phase = dither ? 2.0 * numeric::pi * i / points : 0.0;
        std::vector<FieldMask> masks;
        FieldMask m;
        m.before_stage = stage;
        m.wg = step.interferer_wg;
        m.scale = std::polar(1.0, phase);
        m.add = inj_amp > 0.0 ? std::polar(inj_amp, opt.injected_phase + phase) : Complex{};
        masks.push_back(m);
        const CVector outv = apply_mesh(s, input, nullptr, masks);
        acc += std::norm(outv[out]);
    }
    return acc / points;
}

}  // namespace detail

// Run the calibration protocol against the propagation engine: each MZI hides
// a voltage-to-phase offset; the plan is executed step by step, sweeping the
// target's bias voltage, locating the transmission extremum and recovering the
// offset. Returns the per-MZI recovery report in plan order.
inline std::vector<CalibrationErrorEntry> simulate_calibration(const MeshTopology& t,
                                                               const CalibrationSimOptions& opt = {}) {
    const CalibrationPlan plan = calibration_plan(t);
    const std::size_t n = t.placements.size();
    rng::Sequence rng(opt.seed);
    std::vector<double> hidden(n);
    for (auto& h : hidden) h = (2.0 * rng.uniform() - 1.0) * opt.offset_scale;
    std::vector<double> recovered(n, 0.0);

    const double inj_amp = std::isfinite(opt.injected_power_dbm)
                               ? std::pow(10.0, opt.injected_power_dbm / 20.0)
                               : 0.0;

    std::vector<CalibrationErrorEntry> report;
    report.reserve(plan.steps.size());
    for (const auto& step : plan.steps) {
        // Configure the mesh: every MZI is biased for its requested state using
        // the offsets recovered so far; unmentioned MZIs idle at nominal bar.
        MeshState s = make_state(t);
        std::vector<double> desired(n, numeric::pi);
        for (const auto& [id, setting] : step.required_states)
            desired[id] = setting == MziSetting::cross ? 0.0 : numeric::pi;
        for (std::size_t id = 0; id < n; ++id) {
            if (static_cast<int>(id) == step.mzi_id) continue;
            const double applied = numeric::wrap_2pi(desired[id] - recovered[id]);
            s.phases[id].theta = applied + hidden[id];
        }

        const bool dither = step.classification == StepClass::averaging_required && opt.use_averaging;
        // Residual interference models light arriving through uncalibrated
        // neighbors; steps with a direct or routed null input have none.
        const double step_inj = step.classification == StepClass::averaging_required ? inj_amp : 0.0;
        const double v_max = 2.0 * opt.vpm.v_pi;  // two full periods of effective phase
        const auto power_at_voltage = [&](double v) {
            const double eff = phase_from_voltage(v, opt.vpm) + hidden[step.mzi_id];
            return detail::sweep_detector_power(s, step, opt, eff, dither, step_inj);
        };
        int grid = static_cast<int>(std::ceil(v_max / opt.vpm.resolution));
        double best_v = 0.0, best_p = power_at_voltage(0.0), peak = best_p;
        for (int i = 1; i <= grid; ++i) {
            const double v = v_max * i / grid;
            const double p = power_at_voltage(v);
            peak = std::max(peak, p);
            if (p < best_p) { best_p = p; best_v = v; }
        }
        CalibrationErrorEntry entry;
        entry.mzi_id = step.mzi_id;
        entry.true_offset = hidden[step.mzi_id];
        if (peak < 1e-18) {  // dark route; report instead of guessing
            entry.ok = false;
            entry.recovered_offset = 0.0;
            entry.abs_error = std::numeric_limits<double>::quiet_NaN();
            report.push_back(entry);
            continue;
        }
        const double lo = std::max(0.0, best_v - v_max / grid);
        const double hi = std::min(v_max, best_v + v_max / grid);
        const double v_star = numeric::golden_minimize(power_at_voltage, lo, hi, 1e-6);
        const double extremum = step.sin_sense ? 0.0 : numeric::pi;
        const double rec = numeric::wrap_pm_pi(extremum - phase_from_voltage(v_star, opt.vpm));
        entry.recovered_offset = rec;
        entry.abs_error = std::abs(numeric::wrap_pm_pi(rec - hidden[step.mzi_id]));
        recovered[step.mzi_id] = rec;
        report.push_back(entry);
    }
    return report;
}

// Replay one plan step with exact settings and report the worst relative
// optical power reaching any input designated dark by the plan.
inline double verify_step_nulls(const MeshTopology& t, const CalibrationStep& step) {
    MeshState s = make_state(t);
    set_all_phases(s, bar_state());
    for (const auto& [id, setting] : step.required_states)
        s.phases[id] = setting == MziSetting::cross ? cross_state() : bar_state();
    s.phases[step.mzi_id].theta = 0.55 * numeric::pi;  // generic target split
    CVector input(t.total_ports());
    input[t.port_index(step.light_input_wg)] = 1.0;
    const ForwardTrace trace = forward_trace(s, input);
    double worst = 0.0;
    for (const auto& [id, top] : step.null_inputs) {
        const auto& p = t.placements[id];
        const int port = t.port_index(top ? p.top_wg : p.top_wg + 1);
        worst = std::max(worst, std::norm(trace.fields[p.stage - 1][port]));
    }
    return worst;
}

}  // namespace mzmesh
