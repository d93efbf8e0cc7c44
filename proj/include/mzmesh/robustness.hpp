#pragma once

#include <atomic>
#include <cstdint>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "mzmesh/onn.hpp"

namespace mzmesh {

enum class SweepMode { theta_phi, sigma_loss };

inline const char* sweep_mode_name(SweepMode m) {
    return m == SweepMode::theta_phi ? "theta-phi" : "sigma-loss";
}

// Grid sweep over noise / loss conditions. Axis 1 is sigma_theta (theta-phi
// mode) or the common sigma (sigma-loss mode); axis 2 is sigma_phi or the
// per-MZI loss in dB.
struct SweepSpec {
    SweepMode mode = SweepMode::sigma_loss;
    double axis1_max = 0.5;
    int axis1_steps = 21;
    double axis2_max = 1.0;
    int axis2_steps = 21;
    int trials = 20;
    int max_samples = 200;  // 0 keeps the whole validation set
    std::uint64_t master_seed = 1;
    double threshold = 0.75;
};

struct SweepReport {
    SweepSpec spec;
    MeshKind kind{};
    int n = 0;
    int layer_count = 0;
    std::string dataset_name;
    std::vector<double> accuracy;  // axis1-major grid
    double fom_value = 0.0;

    double axis1_value(int i) const {
        return spec.axis1_steps > 1 ? spec.axis1_max * i / (spec.axis1_steps - 1) : 0.0;
    }
    double axis2_value(int j) const {
        return spec.axis2_steps > 1 ? spec.axis2_max * j / (spec.axis2_steps - 1) : 0.0;
    }
    double cell_area() const {
        return (spec.axis1_max * spec.axis2_max) /
               (static_cast<double>(spec.axis1_steps) * static_cast<double>(spec.axis2_steps));
    }
};

// Area of the grid region at or above the accuracy threshold, counted in
// whole cells of the swept rectangle.
inline double fom_area(const SweepReport& report, double threshold) {
    std::size_t hits = 0;
    for (double a : report.accuracy)
        if (a >= threshold) ++hits;
    return static_cast<double>(hits) * report.cell_area();
}

// Evaluate the accuracy grid. The trained weights are frozen; each cell is the
// mean over independent trials with fresh noise per matrix multiplication.
// Cells are deterministic functions of (spec, master seed), so any thread
// count gives identical grids.
inline SweepReport run_sweep(const OnnModel& model, const Dataset& validation, const SweepSpec& spec,
                             int n_threads = 1) {
    if (spec.axis1_steps < 1 || spec.axis2_steps < 1 || spec.trials < 1)
        throw std::invalid_argument("run_sweep: bad grid spec");
    SweepReport report;
    report.spec = spec;
    report.kind = model.layers.front().topology.kind;
    report.n = model.layers.front().topology.n_main;
    report.layer_count = static_cast<int>(model.layers.size());

    Dataset subset = validation;
    if (spec.max_samples > 0 && validation.size() > static_cast<std::size_t>(spec.max_samples)) {
        subset.samples.assign(validation.samples.begin(), validation.samples.begin() + spec.max_samples);
        subset.labels.assign(validation.labels.begin(), validation.labels.begin() + spec.max_samples);
    }

    const int cells = spec.axis1_steps * spec.axis2_steps;
    report.accuracy.assign(cells, 0.0);

    const auto eval_cell = [&](int cell) {
        const int i = cell / spec.axis2_steps;
        const int j = cell % spec.axis2_steps;
        NoiseConfig noise;
        noise.seed = spec.master_seed;
        double loss_db = 0.0;
        if (spec.mode == SweepMode::theta_phi) {
            noise.sigma_theta = report.axis1_value(i);
            noise.sigma_phi = report.axis2_value(j);
        } else {
            noise.sigma_theta = noise.sigma_phi = report.axis1_value(i);
            loss_db = report.axis2_value(j);
        }
        report.accuracy[cell] =
            evaluate_accuracy(model, subset, noise, loss_db, spec.trials, static_cast<std::uint64_t>(cell));
    };

    if (n_threads <= 1) {
        for (int cell = 0; cell < cells; ++cell) eval_cell(cell);
    } else {
        std::atomic<int> next{0};
        std::vector<std::thread> pool;
        for (int t = 0; t < n_threads; ++t)
            pool.emplace_back([&] {
                for (int cell = next.fetch_add(1); cell < cells; cell = next.fetch_add(1)) eval_cell(cell);
            });
        for (auto& th : pool) th.join();
    }
    report.fom_value = fom_area(report, spec.threshold);
    return report;
}

inline void write_grid_csv(std::ostream& out, const SweepReport& report) {
    out.precision(17);
    const bool tp = report.spec.mode == SweepMode::theta_phi;
    out << (tp ? "sigma_theta_rad" : "sigma_rad") << "," << (tp ? "sigma_phi_rad" : "loss_db_per_mzi")
        << ",mean_accuracy,trials\n";
    for (int i = 0; i < report.spec.axis1_steps; ++i)
        for (int j = 0; j < report.spec.axis2_steps; ++j)
            out << report.axis1_value(i) << "," << report.axis2_value(j) << ","
                << report.accuracy[i * report.spec.axis2_steps + j] << "," << report.spec.trials << "\n";
}

// Minimal SVG heatmap with the threshold region outlined.
inline void write_heatmap_svg(std::ostream& out, const SweepReport& report) {
    const int n1 = report.spec.axis1_steps, n2 = report.spec.axis2_steps;
    const int cell = 18, margin = 40;
    const int w = margin * 2 + n1 * cell, h = margin * 2 + n2 * cell;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\">\n";
    out << "<rect width=\"" << w << "\" height=\"" << h << "\" fill=\"white\"/>\n";
    for (int i = 0; i < n1; ++i) {
        for (int j = 0; j < n2; ++j) {
            const double a = report.accuracy[i * n2 + j];
            const int shade = static_cast<int>(255.0 * a + 0.5);
            const int x = margin + i * cell;
            const int y = h - margin - (j + 1) * cell;
            out << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << cell << "\" height=\"" << cell
                << "\" fill=\"rgb(" << 255 - shade << "," << shade << ",96)\"";
            if (a >= report.spec.threshold) out << " stroke=\"black\" stroke-width=\"1.5\"";
            out << "/>\n";
        }
    }
    out << "<text x=\"" << margin << "\" y=\"" << h - 10 << "\" font-size=\"12\">"
        << (report.spec.mode == SweepMode::theta_phi ? "sigma_theta (rad) vs sigma_phi (rad)"
                                                     : "sigma (rad) vs loss (dB/MZI)")
        << ", outlined cells at accuracy >= " << report.spec.threshold << "</text>\n";
    out << "</svg>\n";
}

}  // namespace mzmesh
