#pragma once

// JSON and CSV emission for reports, plans and trained models. Formats here
// are the stable external surface; everything round-trips through
// nlohmann::json.

#include <fstream>
#include <ostream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "mzmesh/calibration.hpp"
#include "mzmesh/energy.hpp"
#include "mzmesh/onn.hpp"
#include "mzmesh/programming.hpp"
#include "mzmesh/robustness.hpp"
#include "mzmesh/topology.hpp"

namespace mzmesh {

using json = nlohmann::json;

inline json to_json(const StructuralReport& r) {
    return json{{"kind", kind_name(r.kind)},
                {"n", r.n},
                {"mzi_count", r.mzi_count},
                {"depth", r.depth},
                {"min_path", r.min_path},
                {"max_path", r.max_path},
                {"accessible_count", r.accessible_ids.size()},
                {"accessible_fraction", r.accessible_fraction}};
}

inline json to_json(const CalibrationStep& s) {
    json states = json::array();
    for (const auto& [id, setting] : s.required_states)
        states.push_back({{"mzi", id}, {"state", setting == MziSetting::cross  ? "cross"
                                                 : setting == MziSetting::bar ? "bar"
                                                                              : "free"}});
    return json{{"mzi", s.mzi_id},
                {"light_input_wg", s.light_input_wg},
                {"detector_output_wg", s.detector_output_wg},
                {"sense", s.sin_sense ? "sin" : "cos"},
                {"classification", step_class_name(s.classification)},
                {"required_states", states},
                {"upstream", s.upstream_ids},
                {"downstream", s.downstream_ids},
                {"dark_inputs", s.dark_input_wgs},
                {"interferer_wg", s.interferer_wg}};
}

inline json to_json(const CalibrationPlan& p) {
    json steps = json::array();
    for (const auto& s : p.steps) steps.push_back(to_json(s));
    return json{{"kind", kind_name(p.kind)}, {"n", p.n}, {"steps", steps}};
}

inline void write_calibration_csv(std::ostream& out, const std::vector<CalibrationErrorEntry>& report) {
    out.precision(17);
    out << "mzi_id,true,recovered,abs_error\n";
    for (const auto& e : report)
        out << e.mzi_id << "," << e.true_offset << "," << e.recovered_offset << "," << e.abs_error << "\n";
}

inline json to_json(const ProgrammingResult& r) {
    json theta = json::array(), phi = json::array();
    for (const auto& p : r.phases) {
        theta.push_back(p.theta);
        phi.push_back(p.phi);
    }
    return json{{"theta", theta},
                {"phi", phi},
                {"input_shifters", r.shifter_phases},
                {"iterations", r.iterations},
                {"residual", r.residual},
                {"converged", r.converged},
                {"t_prog_seconds", r.t_prog_seconds}};
}

inline const char* activation_name(Activation a) {
    switch (a) {
        case Activation::identity: return "identity";
        case Activation::modrelu: return "modrelu";
        case Activation::electro_optic: return "electro-optic";
    }
    return "?";
}

inline Activation activation_from_name(const std::string& s) {
    if (s == "identity") return Activation::identity;
    if (s == "modrelu") return Activation::modrelu;
    if (s == "electro-optic" || s == "eo") return Activation::electro_optic;
    throw std::invalid_argument("unknown activation: '" + s + "'");
}

inline json to_json(const OnnModel& m) {
    const auto& t = m.layers.front().topology;
    json layers = json::array();
    for (const auto& s : m.layers) {
        json theta = json::array(), phi = json::array();
        for (const auto& p : s.phases) {
            theta.push_back(p.theta);
            phi.push_back(p.phi);
        }
        layers.push_back({{"theta", theta}, {"phi", phi}, {"input_shifters", s.input_shifter_phases}});
    }
    return json{{"kind", kind_name(t.kind)},
                {"n", t.n_main},
                {"layers", layers},
                {"activation",
                 {{"kind", activation_name(m.activation.kind)},
                  {"modrelu_bias", m.activation.modrelu_bias},
                  {"eo_alpha", m.activation.eo_alpha},
                  {"eo_gain", m.activation.eo_gain},
                  {"eo_phase_bias", m.activation.eo_phase_bias}}},
                {"loss", m.loss == LossFn::mse ? "mse" : "cross-entropy"}};
}

inline OnnModel model_from_json(const json& j) {
    OnnModel m = make_onn(kind_from_name(j.at("kind").get<std::string>()), j.at("n").get<int>(),
                          static_cast<int>(j.at("layers").size()));
    const auto& act = j.at("activation");
    m.activation.kind = activation_from_name(act.at("kind").get<std::string>());
    m.activation.modrelu_bias = act.value("modrelu_bias", 0.1);
    m.activation.eo_alpha = act.value("eo_alpha", 0.1);
    m.activation.eo_gain = act.value("eo_gain", 0.05 * numeric::pi);
    m.activation.eo_phase_bias = act.value("eo_phase_bias", numeric::pi);
    m.loss = j.value("loss", std::string("cross-entropy")) == "mse" ? LossFn::mse : LossFn::cross_entropy;
    for (std::size_t li = 0; li < m.layers.size(); ++li) {
        const auto& layer = j.at("layers").at(li);
        const auto& theta = layer.at("theta");
        const auto& phi = layer.at("phi");
        if (theta.size() != m.layers[li].phases.size())
            throw std::invalid_argument("model file: phase count does not match the topology");
        for (std::size_t i = 0; i < theta.size(); ++i)
            m.layers[li].phases[i] = {theta.at(i).get<double>(), phi.at(i).get<double>()};
        const auto& shifters = layer.at("input_shifters");
        if (shifters.size() != m.layers[li].input_shifter_phases.size())
            throw std::invalid_argument("model file: input shifter count does not match the topology");
        for (std::size_t i = 0; i < shifters.size(); ++i)
            m.layers[li].input_shifter_phases[i] = shifters.at(i).get<double>();
    }
    return m;
}

inline OnnModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_model: cannot open '" + path + "'");
    json j;
    try {
        in >> j;
        return model_from_json(j);
    } catch (const json::exception& e) {
        throw std::runtime_error("load_model: malformed model file '" + path + "': " + e.what());
    }
}

inline json to_json(const SweepReport& r) {
    return json{{"topology", kind_name(r.kind)},
                {"n", r.n},
                {"layers", r.layer_count},
                {"dataset", r.dataset_name},
                {"mode", sweep_mode_name(r.spec.mode)},
                {"units", r.spec.mode == SweepMode::theta_phi ? "rad^2" : "dB*rad"},
                {"axis1_max", r.spec.axis1_max},
                {"axis1_steps", r.spec.axis1_steps},
                {"axis2_max", r.spec.axis2_max},
                {"axis2_steps", r.spec.axis2_steps},
                {"trials_per_cell", r.spec.trials},
                {"samples", r.spec.max_samples},
                {"seed", r.spec.master_seed},
                {"threshold", r.spec.threshold},
                {"fom_value", r.fom_value}};
}

inline json to_json(const EfficiencyReport& rep) {
    json rows = json::array();
    for (const auto& row : rep.rows)
        rows.push_back({{"topology", kind_name(row.kind)},
                        {"f_w_hz", row.f_w_hz},
                        {"counted_shifters", row.counted_shifters},
                        {"method", prog_method_name(row.method)},
                        {"t_prog_s", row.t_prog_s},
                        {"e_static_fj", row.e_static_j * 1e15},
                        {"e_total_fj", row.e_total_j * 1e15}});
    return json{{"n", rep.n},
                {"p_pi_w", rep.params.p_pi},
                {"vector_rate_hz", rep.params.vr},
                {"transit_time_s", rep.params.transit_time},
                {"rows", rows},
                {"headline_saving_fraction", rep.headline_saving_fraction},
                {"anchored_saving_fraction", rep.anchored_saving_fraction}};
}

}  // namespace mzmesh
