#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "mzmesh/onn.hpp"
#include "mzmesh/rng.hpp"

namespace mzmesh {

// Raw IDX container: big-endian header (magic, one 32-bit size per dimension)
// followed by the unsigned-byte payload.
struct IdxFile {
    std::uint32_t magic = 0;
    std::vector<std::uint32_t> dims;
    std::vector<std::uint8_t> data;
};

inline IdxFile read_idx(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("read_idx: cannot open '" + path + "'");
    const auto read_u32 = [&](std::size_t offset) {
        std::uint8_t b[4];
        if (!in.read(reinterpret_cast<char*>(b), 4)) {
            std::ostringstream oss;
            oss << "read_idx: '" << path << "' truncated in header at offset " << offset;
            throw std::runtime_error(oss.str());
        }
        return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) | (std::uint32_t(b[2]) << 8) |
               std::uint32_t(b[3]);
    };
    IdxFile f;
    f.magic = read_u32(0);
    const std::uint32_t dtype = (f.magic >> 8) & 0xff;
    const std::uint32_t ndim = f.magic & 0xff;
    if ((f.magic >> 16) != 0 || dtype != 0x08 || ndim == 0 || ndim > 3) {
        std::ostringstream oss;
        oss << "read_idx: '" << path << "' bad magic 0x" << std::hex << f.magic << std::dec
            << " at offset 0 (expected 0x00000801 or 0x00000803)";
        throw std::runtime_error(oss.str());
    }
    std::size_t total = 1;
    for (std::uint32_t d = 0; d < ndim; ++d) {
        f.dims.push_back(read_u32(4 + 4 * d));
        total *= f.dims.back();
    }
    f.data.resize(total);
    const std::size_t payload_offset = 4 + 4 * ndim;
    if (!in.read(reinterpret_cast<char*>(f.data.data()), static_cast<std::streamsize>(total))) {
        std::ostringstream oss;
        oss << "read_idx: '" << path << "' truncated payload at offset " << payload_offset << " (expected "
            << total << " bytes, got " << in.gcount() << ")";
        throw std::runtime_error(oss.str());
    }
    return f;
}

struct PcaModel {
    int input_dim = 0;
    int components = 0;
    std::vector<double> mean;                 // input_dim
    std::vector<std::vector<double>> basis;   // components rows, orthonormal
    std::vector<double> eigenvalues;          // descending
    std::vector<double> feat_min, feat_max;   // per projected feature, from the fit data
};

namespace detail {

// Jacobi eigensolver for a small dense symmetric matrix; returns eigenvalues
// and overwrites `vecs` with column eigenvectors.
inline void jacobi_symmetric(std::vector<std::vector<double>>& a, std::vector<double>& eig,
                             std::vector<std::vector<double>>& vecs) {
    const std::size_t n = a.size();
    vecs.assign(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) vecs[i][i] = 1.0;
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) off += a[i][j] * a[i][j];
        if (off < 1e-26) break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                if (std::abs(a[p][q]) < 1e-18) continue;
                const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1));
                const double c = 1.0 / std::sqrt(t * t + 1), s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a[k][p], akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a[p][k], aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = vecs[k][p], vkq = vecs[k][q];
                    vecs[k][p] = c * vkp - s * vkq;
                    vecs[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }
    eig.resize(n);
    for (std::size_t i = 0; i < n; ++i) eig[i] = a[i][i];
}

inline void orthonormalize_rows(std::vector<std::vector<double>>& v) {
    for (std::size_t i = 0; i < v.size(); ++i) {
        for (std::size_t j = 0; j < i; ++j) {
            double dot = 0.0;
            for (std::size_t k = 0; k < v[i].size(); ++k) dot += v[i][k] * v[j][k];
            for (std::size_t k = 0; k < v[i].size(); ++k) v[i][k] -= dot * v[j][k];
        }
        double norm = 0.0;
        for (double x : v[i]) norm += x * x;
        norm = std::sqrt(norm);
        if (norm > 0.0)
            for (double& x : v[i]) x /= norm;
    }
}

}  // namespace detail

// Top-k principal components of the row data by block subspace iteration with
// Rayleigh-Ritz extraction on the sample covariance.
inline PcaModel fit_pca(const std::vector<std::vector<double>>& rows, int k, int max_iters = 500,
                        double tol = 1e-12) {
    if (rows.empty()) throw std::invalid_argument("fit_pca: no data");
    const int d = static_cast<int>(rows.front().size());
    if (k < 1 || k > d) throw std::invalid_argument("fit_pca: bad component count");
    PcaModel m;
    m.input_dim = d;
    m.components = k;
    m.mean.assign(d, 0.0);
    for (const auto& r : rows)
        for (int i = 0; i < d; ++i) m.mean[i] += r[i];
    for (double& v : m.mean) v /= static_cast<double>(rows.size());

    std::vector<std::vector<double>> cov(d, std::vector<double>(d, 0.0));
    std::vector<double> c(d);
    for (const auto& r : rows) {
        for (int i = 0; i < d; ++i) c[i] = r[i] - m.mean[i];
        for (int i = 0; i < d; ++i) {
            const double ci = c[i];
            if (ci == 0.0) continue;
            for (int j = i; j < d; ++j) cov[i][j] += ci * c[j];
        }
    }
    for (int i = 0; i < d; ++i)
        for (int j = i; j < d; ++j) {
            cov[i][j] /= static_cast<double>(rows.size());
            cov[j][i] = cov[i][j];
        }

    rng::Sequence rng(0x9ca5eedULL);
    std::vector<std::vector<double>> v(k, std::vector<double>(d));
    for (auto& row : v)
        for (double& x : row) x = rng.gaussian();
    detail::orthonormalize_rows(v);

    std::vector<double> prev_eig(k, 0.0);
    std::vector<std::vector<double>> w(k, std::vector<double>(d));
    for (int it = 0; it < max_iters; ++it) {
        for (int r = 0; r < k; ++r)
            for (int i = 0; i < d; ++i) {
                double acc = 0.0;
                for (int j = 0; j < d; ++j) acc += cov[i][j] * v[r][j];
                w[r][i] = acc;
            }
        v = w;
        detail::orthonormalize_rows(v);
        // Rayleigh-Ritz: rotate the block to diagonalize V C V^T
        std::vector<std::vector<double>> small(k, std::vector<double>(k, 0.0));
        for (int r = 0; r < k; ++r)
            for (int i = 0; i < d; ++i) {
                double acc = 0.0;
                for (int j = 0; j < d; ++j) acc += cov[i][j] * v[r][j];
                w[r][i] = acc;
            }
        for (int r = 0; r < k; ++r)
            for (int s2 = 0; s2 < k; ++s2) {
                double acc = 0.0;
                for (int i = 0; i < d; ++i) acc += v[r][i] * w[s2][i];
                small[r][s2] = acc;
            }
        std::vector<double> eig;
        std::vector<std::vector<double>> q;
        detail::jacobi_symmetric(small, eig, q);
        std::vector<int> order(k);
        for (int i = 0; i < k; ++i) order[i] = i;
        std::sort(order.begin(), order.end(), [&](int a, int b) { return eig[a] > eig[b]; });
        std::vector<std::vector<double>> rotated(k, std::vector<double>(d, 0.0));
        std::vector<double> sorted_eig(k);
        for (int r = 0; r < k; ++r) {
            sorted_eig[r] = eig[order[r]];
            for (int s2 = 0; s2 < k; ++s2)
                for (int i = 0; i < d; ++i) rotated[r][i] += q[s2][order[r]] * v[s2][i];
        }
        v = std::move(rotated);
        double delta = 0.0;
        for (int r = 0; r < k; ++r)
            delta = std::max(delta, std::abs(sorted_eig[r] - prev_eig[r]) /
                                        std::max(1e-300, std::abs(sorted_eig[r])));
        prev_eig = sorted_eig;
        if (delta < tol && it > 2) break;
    }
    m.basis = v;
    m.eigenvalues = prev_eig;
    return m;
}

namespace detail {

inline std::vector<std::vector<double>> flatten_images(const IdxFile& images) {
    if (images.dims.size() != 3)
        throw std::runtime_error("flatten_images: expected a 3-dimensional image file");
    const std::size_t n = images.dims[0];
    const std::size_t px = static_cast<std::size_t>(images.dims[1]) * images.dims[2];
    std::vector<std::vector<double>> rows(n, std::vector<double>(px));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t p = 0; p < px; ++p) rows[i][p] = images.data[i * px + p] / 255.0;
    return rows;
}

inline Dataset project_dataset(const PcaModel& pca, const std::vector<std::vector<double>>& rows,
                               const std::vector<std::uint8_t>& labels) {
    Dataset d;
    d.n_features = pca.components;
    d.samples.reserve(rows.size());
    d.labels.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        std::vector<double> f(pca.components);
        for (int r = 0; r < pca.components; ++r) {
            double acc = 0.0;
            for (int j = 0; j < pca.input_dim; ++j) acc += pca.basis[r][j] * (rows[i][j] - pca.mean[j]);
            f[r] = acc;
        }
        for (int r = 0; r < pca.components; ++r) {
            const double span = pca.feat_max[r] - pca.feat_min[r];
            f[r] = span > 0.0 ? (f[r] - pca.feat_min[r]) / span : 0.0;
        }
        double norm = 0.0;
        for (double x : f) norm += x * x;
        norm = std::sqrt(norm);
        if (norm > 0.0)
            for (double& x : f) x /= norm;
        d.samples.push_back(std::move(f));
        d.labels.push_back(labels[i]);
    }
    return d;
}

}  // namespace detail

// Fit the reduction on one image/label pair (the training split): flatten,
// PCA to n_features, min-max normalize per feature, power-normalize each
// encoded sample. The returned model projects further splits consistently.
inline PcaModel fit_mnist_reduction(const std::string& image_file, const std::string& label_file,
                                    int n_features) {
    const IdxFile images = read_idx(image_file);
    const IdxFile labels = read_idx(label_file);
    if (images.dims.size() != 3 || (images.magic & 0xff) != 3)
        throw std::runtime_error("fit_mnist_reduction: '" + image_file + "' is not an image file");
    if (labels.dims.size() != 1)
        throw std::runtime_error("fit_mnist_reduction: '" + label_file + "' is not a label file");
    if (images.dims[0] != labels.dims[0])
        throw std::runtime_error("fit_mnist_reduction: image/label counts differ");
    const auto rows = detail::flatten_images(images);
    PcaModel pca = fit_pca(rows, n_features);
    pca.feat_min.assign(n_features, std::numeric_limits<double>::infinity());
    pca.feat_max.assign(n_features, -std::numeric_limits<double>::infinity());
    for (const auto& r : rows) {
        for (int c = 0; c < n_features; ++c) {
            double acc = 0.0;
            for (int j = 0; j < pca.input_dim; ++j) acc += pca.basis[c][j] * (r[j] - pca.mean[j]);
            pca.feat_min[c] = std::min(pca.feat_min[c], acc);
            pca.feat_max[c] = std::max(pca.feat_max[c], acc);
        }
    }
    return pca;
}

inline Dataset mnist_reduced(const PcaModel& pca, const std::string& image_file,
                             const std::string& label_file) {
    const IdxFile images = read_idx(image_file);
    const IdxFile labels = read_idx(label_file);
    if (images.dims[0] != labels.dims[0])
        throw std::runtime_error("mnist_reduced: image/label counts differ");
    return detail::project_dataset(pca, detail::flatten_images(images), labels.data);
}

inline Dataset mnist_reduced(const std::string& image_file, const std::string& label_file, int n_features) {
    const PcaModel pca = fit_mnist_reduction(image_file, label_file, n_features);
    return mnist_reduced(pca, image_file, label_file);
}

}  // namespace mzmesh
