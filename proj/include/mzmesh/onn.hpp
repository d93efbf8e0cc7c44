#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "mzmesh/propagation.hpp"
#include "mzmesh/rng.hpp"
#include "mzmesh/topology.hpp"

namespace mzmesh {

enum class Activation { identity, modrelu, electro_optic };

struct ActivationConfig {
    Activation kind = Activation::modrelu;
    double modrelu_bias = 0.1;
    // electro-optic variant parameters
    double eo_alpha = 0.1;
    double eo_gain = 0.05 * numeric::pi;
    double eo_phase_bias = numeric::pi;
};

enum class LossFn { mse, cross_entropy };

struct OnnModel {
    std::vector<MeshState> layers;
    ActivationConfig activation{};
    LossFn loss = LossFn::cross_entropy;
    int n_features = 0;
    int n_classes = 0;
};

inline OnnModel make_onn(MeshKind kind, int n, int layer_count, ActivationConfig act = {},
                         LossFn loss = LossFn::cross_entropy) {
    if (layer_count < 1) throw std::invalid_argument("make_onn: need at least one layer");
    OnnModel m;
    const MeshTopology t = build_mesh(kind, n);
    for (int i = 0; i < layer_count; ++i) m.layers.push_back(make_state(t));
    m.activation = act;
    m.loss = loss;
    m.n_features = n;
    m.n_classes = n;
    return m;
}

// Samples hold power-normalized real amplitudes; labels are class indices.
struct Dataset {
    int n_features = 0;
    std::vector<std::vector<double>> samples;
    std::vector<int> labels;

    std::size_t size() const { return samples.size(); }
};

// Class k drawn from N(separation * e_k, spread^2 I); each sample encoded to
// unit optical power.
inline Dataset gaussian_dataset(int n_classes, int per_class, double separation, double spread,
                                std::uint64_t seed) {
    if (n_classes < 2) throw std::invalid_argument("gaussian_dataset: need at least two classes");
    Dataset d;
    d.n_features = n_classes;
    rng::Sequence rng(seed);
    for (int k = 0; k < n_classes; ++k) {
        for (int i = 0; i < per_class; ++i) {
            std::vector<double> x(n_classes);
            for (int f = 0; f < n_classes; ++f) x[f] = (f == k ? separation : 0.0) + spread * rng.gaussian();
            double norm = 0.0;
            for (double v : x) norm += v * v;
            norm = std::sqrt(norm);
            if (norm > 0.0)
                for (double& v : x) v /= norm;
            d.samples.push_back(std::move(x));
            d.labels.push_back(k);
        }
    }
    return d;
}

namespace detail {

inline Complex activate_one(const ActivationConfig& cfg, Complex z) {
    switch (cfg.kind) {
        case Activation::identity:
            return z;
        case Activation::modrelu: {
            const double r = std::abs(z);
            if (r <= cfg.modrelu_bias) return {};
            return (r - cfg.modrelu_bias) * z / r;
        }
        case Activation::electro_optic: {
            const double phase = cfg.eo_gain * std::norm(z) / 2.0 + cfg.eo_phase_bias / 2.0;
            const Complex k = Complex(0.0, std::sqrt(1.0 - cfg.eo_alpha));
            return k * std::polar(std::cos(phase), -phase) * z;
        }
    }
    return z;
}

// Pull the cotangent back through the activation at the forward value z,
// using the Wirtinger pair (df/dz, df/dzbar):
// g_z = g_f conj(df/dz) + conj(g_f) df/dzbar.
inline Complex activate_adjoint(const ActivationConfig& cfg, Complex z, Complex g) {
    switch (cfg.kind) {
        case Activation::identity:
            return g;
        case Activation::modrelu: {
            const double r = std::abs(z);
            if (r <= cfg.modrelu_bias) return {};
            const double b = cfg.modrelu_bias;
            const Complex dz = 1.0 - b / (2.0 * r);           // real
            const Complex dzb = (b / 2.0) * z * z / (r * r * r);
            return g * std::conj(dz) + std::conj(g) * dzb;
        }
        case Activation::electro_optic: {
            const double u = std::norm(z);
            const double phase = cfg.eo_gain * u / 2.0 + cfg.eo_phase_bias / 2.0;
            const Complex k = Complex(0.0, std::sqrt(1.0 - cfg.eo_alpha));
            const Complex h = std::polar(std::cos(phase), -phase);
            const Complex hp = -0.5 * cfg.eo_gain * std::polar(1.0, -phase) *
                               Complex(std::sin(phase), std::cos(phase));
            const Complex dz = k * (h + hp * u);
            const Complex dzb = k * hp * z * z;
            return g * std::conj(dz) + std::conj(g) * dzb;
        }
    }
    return g;
}

inline CVector embed_features(const MeshTopology& t, const std::vector<double>& x) {
    CVector v(t.total_ports());
    for (int f = 0; f < t.n_main; ++f) v[t.port_index(f + 1)] = x[f];
    return v;
}

}  // namespace detail

// Scores are the output optical powers on the main ports; the prediction is
// the index with the highest power. A fresh noise sample is drawn per layer
// (one per matrix multiplication).
inline std::vector<double> forward_scores(const OnnModel& m, const std::vector<double>& x,
                                          const NoiseConfig& noise = {}, rng::Stream stream = rng::Stream(0)) {
    if (static_cast<int>(x.size()) != m.n_features)
        throw std::invalid_argument("forward_scores: feature dimension mismatch");
    const auto& t0 = m.layers.front().topology;
    CVector v = detail::embed_features(t0, x);
    for (std::size_t layer = 0; layer < m.layers.size(); ++layer) {
        const MeshState& s = m.layers[layer];
        const NoiseSample ns = draw_noise(noise, s.topology, stream.fork(layer));
        const CVector out = apply_mesh(s, v, &ns);
        if (layer + 1 < m.layers.size()) {
            CVector next(s.topology.total_ports());
            for (int f = 0; f < s.topology.n_main; ++f) {
                const Complex z = out[s.topology.port_index(f + 1)];
                next[s.topology.port_index(f + 1)] = detail::activate_one(m.activation, z);
            }
            v = std::move(next);
        } else {
            v = out;
        }
    }
    std::vector<double> scores(m.n_classes);
    const auto& tl = m.layers.back().topology;
    for (int c = 0; c < m.n_classes; ++c) scores[c] = std::norm(v[tl.port_index(c + 1)]);
    return scores;
}

inline int predict(const OnnModel& m, const std::vector<double>& x, const NoiseConfig& noise = {},
                   rng::Stream stream = rng::Stream(0)) {
    const auto scores = forward_scores(m, x, noise, stream);
    return static_cast<int>(std::max_element(scores.begin(), scores.end()) - scores.begin());
}

namespace detail {

inline double loss_value(LossFn fn, const std::vector<double>& scores, int label) {
    const int c = static_cast<int>(scores.size());
    if (fn == LossFn::mse) {
        double acc = 0.0;
        for (int i = 0; i < c; ++i) {
            const double y = i == label ? 1.0 : 0.0;
            acc += (scores[i] - y) * (scores[i] - y);
        }
        return acc / c;
    }
    // softmax cross entropy on the detected powers
    double mx = scores[0];
    for (double s : scores) mx = std::max(mx, s);
    double z = 0.0;
    for (double s : scores) z += std::exp(s - mx);
    return -(scores[label] - mx - std::log(z));
}

inline std::vector<double> loss_score_grad(LossFn fn, const std::vector<double>& scores, int label) {
    const int c = static_cast<int>(scores.size());
    std::vector<double> g(c);
    if (fn == LossFn::mse) {
        for (int i = 0; i < c; ++i) {
            const double y = i == label ? 1.0 : 0.0;
            g[i] = 2.0 * (scores[i] - y) / c;
        }
        return g;
    }
    double mx = scores[0];
    for (double s : scores) mx = std::max(mx, s);
    double z = 0.0;
    for (double s : scores) z += std::exp(s - mx);
    for (int i = 0; i < c; ++i) g[i] = std::exp(scores[i] - mx) / z - (i == label ? 1.0 : 0.0);
    return g;
}

}  // namespace detail

struct ModelGrads {
    // one entry per layer
    std::vector<std::vector<double>> d_theta, d_phi;
    std::vector<std::vector<double>> d_shifters;
};

// Loss and analytic gradients for one sample on an ideal (noiseless) model,
// backpropagated through detection, activations and every mesh layer down to
// the phases.
inline double sample_loss_and_grads(const OnnModel& m, const std::vector<double>& x, int label,
                                    ModelGrads* grads) {
    const std::size_t n_layers = m.layers.size();
    std::vector<ForwardTrace> traces(n_layers);
    std::vector<CVector> layer_inputs(n_layers);
    const auto& t0 = m.layers.front().topology;
    CVector v = detail::embed_features(t0, x);
    for (std::size_t layer = 0; layer < n_layers; ++layer) {
        const MeshState& s = m.layers[layer];
        layer_inputs[layer] = v;
        traces[layer] = forward_trace(s, v);
        const CVector& out = traces[layer].fields.back();
        if (layer + 1 < n_layers) {
            CVector next(s.topology.total_ports());
            for (int f = 0; f < s.topology.n_main; ++f) {
                const int p = s.topology.port_index(f + 1);
                next[p] = detail::activate_one(m.activation, out[p]);
            }
            v = next;
        } else {
            v = out;
        }
    }

    const auto& tl = m.layers.back().topology;
    std::vector<double> scores(m.n_classes);
    for (int c = 0; c < m.n_classes; ++c) scores[c] = std::norm(v[tl.port_index(c + 1)]);
    const double loss = detail::loss_value(m.loss, scores, label);
    if (!grads) return loss;
    if (!std::isfinite(loss)) throw std::runtime_error("training diverged: loss is not finite");

    const auto sg = detail::loss_score_grad(m.loss, scores, label);
    // detection: s_i = |z_i|^2 gives g_z = (dL/ds_i) z_i
    CVector cot(tl.total_ports());
    for (int c = 0; c < m.n_classes; ++c) {
        const int p = tl.port_index(c + 1);
        cot[p] = sg[c] * v[p];
    }

    grads->d_theta.assign(n_layers, {});
    grads->d_phi.assign(n_layers, {});
    grads->d_shifters.assign(n_layers, {});
    for (std::size_t li = n_layers; li-- > 0;) {
        const MeshState& s = m.layers[li];
        if (li + 1 < n_layers) {
            // pull back through the activation at this layer's output
            const CVector& out = traces[li].fields.back();
            CVector g(s.topology.total_ports());
            for (int f = 0; f < s.topology.n_main; ++f) {
                const int p = s.topology.port_index(f + 1);
                g[p] = detail::activate_adjoint(m.activation, out[p], cot[p]);
            }
            cot = std::move(g);
        }
        const PhaseGrads pg = backward(s, traces[li], cot);
        grads->d_theta[li] = pg.d_theta;
        grads->d_phi[li] = pg.d_phi;
        grads->d_shifters[li] = pg.d_shifters;
        // cot now holds the gradient at this layer's raw input; only main
        // ports carry over to the previous layer's activation output
    }
    return loss;
}

enum class GradMode { analytic, finite_difference };

enum class Optimizer { sgd, adam };

struct TrainingConfig {
    int epochs = 30;
    int batch_size = 32;
    double learning_rate = 0.05;
    std::uint64_t seed = 1;
    GradMode grad_mode = GradMode::analytic;
    Optimizer optimizer = Optimizer::adam;
};

struct TrainReport {
    std::vector<double> loss_curve;  // mean loss per epoch
};

namespace detail {

inline double batch_loss(const OnnModel& m, const Dataset& data, const std::vector<std::size_t>& idx) {
    double acc = 0.0;
    for (std::size_t i : idx) acc += sample_loss_and_grads(m, data.samples[i], data.labels[i], nullptr);
    return acc / static_cast<double>(idx.size());
}

// Central finite differences over every phase parameter; oracle-grade and
// accordingly slow, for small models.
inline ModelGrads fd_batch_grads(OnnModel& m, const Dataset& data, const std::vector<std::size_t>& idx,
                                 double step = 1e-5) {
    ModelGrads g;
    const std::size_t n_layers = m.layers.size();
    g.d_theta.assign(n_layers, {});
    g.d_phi.assign(n_layers, {});
    g.d_shifters.assign(n_layers, {});
    for (std::size_t li = 0; li < n_layers; ++li) {
        auto& s = m.layers[li];
        g.d_theta[li].assign(s.phases.size(), 0.0);
        g.d_phi[li].assign(s.phases.size(), 0.0);
        g.d_shifters[li].assign(s.input_shifter_phases.size(), 0.0);
        for (std::size_t i = 0; i < s.phases.size(); ++i) {
            for (int which = 0; which < 2; ++which) {
                double& p = which == 0 ? s.phases[i].theta : s.phases[i].phi;
                const double keep = p;
                p = keep + step;
                const double lp = batch_loss(m, data, idx);
                p = keep - step;
                const double lm = batch_loss(m, data, idx);
                p = keep;
                (which == 0 ? g.d_theta[li][i] : g.d_phi[li][i]) = (lp - lm) / (2.0 * step);
            }
        }
        for (std::size_t i = 0; i < s.input_shifter_phases.size(); ++i) {
            const double keep = s.input_shifter_phases[i];
            s.input_shifter_phases[i] = keep + step;
            const double lp = batch_loss(m, data, idx);
            s.input_shifter_phases[i] = keep - step;
            const double lm = batch_loss(m, data, idx);
            s.input_shifter_phases[i] = keep;
            g.d_shifters[li][i] = (lp - lm) / (2.0 * step);
        }
    }
    return g;
}

}  // namespace detail

// Mini-batch gradient descent on all phases; the model trains on the ideal
// mesh (no noise or loss), which are applied only at evaluation time.
inline TrainReport train(OnnModel& m, const Dataset& data, const TrainingConfig& cfg) {
    if (cfg.epochs < 0 || cfg.batch_size < 1 || cfg.learning_rate <= 0.0)
        throw std::invalid_argument("train: bad config");
    if (data.n_features != m.n_features) throw std::invalid_argument("train: dataset dimension mismatch");
    TrainReport report;
    if (cfg.epochs == 0 || data.size() == 0) return report;

    rng::Sequence shuffle_rng(cfg.seed);
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    // flat parameter indexing for the adaptive-moment state
    std::size_t n_par = 0;
    for (const auto& layer : m.layers) n_par += 2 * layer.phases.size() + layer.input_shifter_phases.size();
    std::vector<double> m1(n_par, 0.0), m2(n_par, 0.0);
    constexpr double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;
    long step_count = 0;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[shuffle_rng.below(i)]);
        double epoch_loss = 0.0;
        std::size_t seen = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
            const std::vector<std::size_t> batch(order.begin() + start, order.begin() + stop);
            ModelGrads acc;
            double batch_loss_total = 0.0;
            if (cfg.grad_mode == GradMode::analytic) {
                for (std::size_t bi = 0; bi < batch.size(); ++bi) {
                    ModelGrads g;
                    batch_loss_total +=
                        sample_loss_and_grads(m, data.samples[batch[bi]], data.labels[batch[bi]], &g);
                    if (bi == 0) {
                        acc = std::move(g);
                    } else {
                        for (std::size_t li = 0; li < m.layers.size(); ++li) {
                            for (std::size_t j = 0; j < acc.d_theta[li].size(); ++j) {
                                acc.d_theta[li][j] += g.d_theta[li][j];
                                acc.d_phi[li][j] += g.d_phi[li][j];
                            }
                            for (std::size_t j = 0; j < acc.d_shifters[li].size(); ++j)
                                acc.d_shifters[li][j] += g.d_shifters[li][j];
                        }
                    }
                }
            } else {
                acc = detail::fd_batch_grads(m, data, batch);
                batch_loss_total = detail::batch_loss(m, data, batch) * static_cast<double>(batch.size());
                for (auto& v : acc.d_theta)
                    for (auto& x : v) x *= static_cast<double>(batch.size());
                for (auto& v : acc.d_phi)
                    for (auto& x : v) x *= static_cast<double>(batch.size());
                for (auto& v : acc.d_shifters)
                    for (auto& x : v) x *= static_cast<double>(batch.size());
            }
            const double inv_batch = 1.0 / static_cast<double>(batch.size());
            if (cfg.optimizer == Optimizer::sgd) {
                const double scale = cfg.learning_rate * inv_batch;
                for (std::size_t li = 0; li < m.layers.size(); ++li) {
                    auto& s = m.layers[li];
                    for (std::size_t j = 0; j < s.phases.size(); ++j) {
                        s.phases[j].theta -= scale * acc.d_theta[li][j];
                        s.phases[j].phi -= scale * acc.d_phi[li][j];
                    }
                    for (std::size_t j = 0; j < s.input_shifter_phases.size(); ++j)
                        s.input_shifter_phases[j] -= scale * acc.d_shifters[li][j];
                }
            } else {
                ++step_count;
                const double c1 = 1.0 - std::pow(beta1, step_count);
                const double c2 = 1.0 - std::pow(beta2, step_count);
                std::size_t pi_idx = 0;
                const auto adam_step = [&](double& param, double grad) {
                    grad *= inv_batch;
                    m1[pi_idx] = beta1 * m1[pi_idx] + (1.0 - beta1) * grad;
                    m2[pi_idx] = beta2 * m2[pi_idx] + (1.0 - beta2) * grad * grad;
                    param -= cfg.learning_rate * (m1[pi_idx] / c1) / (std::sqrt(m2[pi_idx] / c2) + adam_eps);
                    ++pi_idx;
                };
                for (std::size_t li = 0; li < m.layers.size(); ++li) {
                    auto& s = m.layers[li];
                    for (std::size_t j = 0; j < s.phases.size(); ++j) {
                        adam_step(s.phases[j].theta, acc.d_theta[li][j]);
                        adam_step(s.phases[j].phi, acc.d_phi[li][j]);
                    }
                    for (std::size_t j = 0; j < s.input_shifter_phases.size(); ++j)
                        adam_step(s.input_shifter_phases[j], acc.d_shifters[li][j]);
                }
            }
            epoch_loss += batch_loss_total;
            seen += batch.size();
        }
        const double mean_loss = epoch_loss / static_cast<double>(seen);
        if (!std::isfinite(mean_loss)) throw std::runtime_error("training diverged: loss is not finite");
        report.loss_curve.push_back(mean_loss);
    }
    return report;
}

// Mean accuracy over independent retests of the validation set, each with
// fresh phase noise per matrix multiplication and the given per-MZI loss.
inline double evaluate_accuracy(const OnnModel& m, const Dataset& data, const NoiseConfig& noise,
                                double per_mzi_loss_db, int trials, std::uint64_t stream_salt = 0) {
    if (trials < 1) throw std::invalid_argument("evaluate_accuracy: trials must be >= 1");
    if (data.size() == 0) return 0.0;
    OnnModel lossy = m;
    if (per_mzi_loss_db != 0.0)
        for (auto& layer : lossy.layers) set_uniform_loss(layer, per_mzi_loss_db);
    const rng::Stream base = rng::Stream(noise.seed).fork(stream_salt);
    double acc = 0.0;
    for (int trial = 0; trial < trials; ++trial) {
        const rng::Stream ts = base.fork(trial);
        std::size_t correct = 0;
        for (std::size_t i = 0; i < data.size(); ++i) {
            if (predict(lossy, data.samples[i], noise, ts.fork(i)) == data.labels[i]) ++correct;
        }
        acc += static_cast<double>(correct) / static_cast<double>(data.size());
    }
    return acc / trials;
}

}  // namespace mzmesh
