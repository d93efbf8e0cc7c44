#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>

#include "mzmesh/mnist.hpp"
#include "mzmesh/onn.hpp"
#include "test_util.hpp"

using namespace mzmesh;

namespace {

void write_u32(std::ofstream& out, std::uint32_t v) {
    const unsigned char b[4] = {static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
                                static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

struct SynthSet {
    std::string image_path, label_path;
};

// Synthetic 8x8 "digit" set: each class is a distinct low-rank pattern plus
// pixel noise, written in IDX layout.
SynthSet write_synthetic_idx(const std::string& stem, int per_class, std::uint64_t seed) {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "mzmesh_tests";
    fs::create_directories(dir);
    SynthSet out{(dir / (stem + "-images-idx3-ubyte")).string(),
                 (dir / (stem + "-labels-idx1-ubyte")).string()};

    rng::Sequence rng(seed);
    const int n = 10 * per_class, side = 8;
    std::ofstream img(out.image_path, std::ios::binary);
    std::ofstream lab(out.label_path, std::ios::binary);
    write_u32(img, 0x00000803);
    write_u32(img, n);
    write_u32(img, side);
    write_u32(img, side);
    write_u32(lab, 0x00000801);
    write_u32(lab, n);
    for (int k = 0; k < 10; ++k) {
        for (int i = 0; i < per_class; ++i) {
            for (int p = 0; p < side * side; ++p) {
                const int r = p / side, c = p % side;
                double v = 40.0 * ((r + k) % 5) + 30.0 * ((c * (k + 2)) % 3) + 25.0 * rng.uniform();
                img.put(static_cast<char>(std::min(255.0, v)));
            }
            lab.put(static_cast<char>(k));
        }
    }
    return out;
}

}  // namespace

TEST_CASE("idx parsing validates headers") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "mzmesh_tests";
    fs::create_directories(dir);

    {
        std::ofstream bad((dir / "bad_magic").string(), std::ios::binary);
        write_u32(bad, 0xdeadbeef);
    }
    try {
        read_idx((dir / "bad_magic").string());
        FAIL("expected rejection");
    } catch (const std::runtime_error& e) {
        REQUIRE(std::string(e.what()).find("offset 0") != std::string::npos);
    }

    {
        std::ofstream trunc((dir / "truncated").string(), std::ios::binary);
        write_u32(trunc, 0x00000801);
        write_u32(trunc, 100);  // claims 100 labels, provides none
    }
    try {
        read_idx((dir / "truncated").string());
        FAIL("expected rejection");
    } catch (const std::runtime_error& e) {
        REQUIRE(std::string(e.what()).find("truncated payload") != std::string::npos);
        REQUIRE(std::string(e.what()).find("offset 8") != std::string::npos);
    }
}

TEST_CASE("synthetic idx round trip and reduction shape") {
    const SynthSet set = write_synthetic_idx("shape", 20, 404);
    const IdxFile images = read_idx(set.image_path);
    REQUIRE(images.dims == std::vector<std::uint32_t>{200, 8, 8});

    const Dataset d = mnist_reduced(set.image_path, set.label_path, 10);
    REQUIRE(d.size() == 200);
    REQUIRE(d.n_features == 10);

    // all ten labels present
    std::map<int, int> hist;
    for (int l : d.labels) hist[l]++;
    REQUIRE(hist.size() == 10);
    for (const auto& [k, c] : hist) REQUIRE(c == 20);

    // encoded samples carry unit optical power
    for (const auto& s : d.samples) {
        double p = 0.0;
        for (double v : s) p += v * v;
        REQUIRE(std::abs(p - 1.0) < 1e-12);
    }
}

TEST_CASE("pca matches a full eigendecomposition oracle") {
    const SynthSet set = write_synthetic_idx("pca", 100, 405);
    const IdxFile images = read_idx(set.image_path);

    // library path
    std::vector<std::vector<double>> rows(images.dims[0], std::vector<double>(64));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (int p = 0; p < 64; ++p) rows[i][p] = images.data[i * 64 + p] / 255.0;
    const PcaModel pca = fit_pca(rows, 10);

    // oracle: full covariance eigendecomposition via an independent Jacobi
    const int d = 64;
    std::vector<double> mean(d, 0.0);
    for (const auto& r : rows)
        for (int i = 0; i < d; ++i) mean[i] += r[i] / rows.size();
    std::vector<std::vector<double>> cov(d, std::vector<double>(d, 0.0));
    for (const auto& r : rows)
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) cov[i][j] += (r[i] - mean[i]) * (r[j] - mean[j]) / rows.size();
    // cyclic Jacobi sweeps, written independently of the library helper
    std::vector<std::vector<double>> a = cov;
    for (int sweep = 0; sweep < 60; ++sweep) {
        double off = 0.0;
        for (int i = 0; i < d; ++i)
            for (int j = i + 1; j < d; ++j) off += a[i][j] * a[i][j];
        if (off < 1e-24) break;
        for (int p = 0; p < d; ++p)
            for (int q = p + 1; q < d; ++q) {
                if (std::abs(a[p][q]) < 1e-16) continue;
                const double theta = (a[q][q] - a[p][p]) / (2 * a[p][q]);
                const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1));
                const double c = 1 / std::sqrt(t * t + 1), s = t * c;
                for (int k = 0; k < d; ++k) {
                    const double akp = a[k][p], akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for (int k = 0; k < d; ++k) {
                    const double apk = a[p][k], aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
    }
    std::vector<double> oracle_eig(d);
    for (int i = 0; i < d; ++i) oracle_eig[i] = a[i][i];
    std::sort(oracle_eig.rbegin(), oracle_eig.rend());

    for (int k = 0; k < 10; ++k) {
        REQUIRE(std::abs(pca.eigenvalues[k] - oracle_eig[k]) <= 1e-8 * std::abs(oracle_eig[k]));
    }

    // the basis rows are orthonormal
    for (int i = 0; i < 10; ++i)
        for (int j = 0; j <= i; ++j) {
            double dot = 0.0;
            for (int p = 0; p < d; ++p) dot += pca.basis[i][p] * pca.basis[j][p];
            REQUIRE(std::abs(dot - (i == j ? 1.0 : 0.0)) < 1e-9);
        }
}

TEST_CASE("fitted reduction projects further splits consistently") {
    const SynthSet train = write_synthetic_idx("fit", 40, 406);
    const SynthSet val = write_synthetic_idx("val", 15, 407);
    const PcaModel pca = fit_mnist_reduction(train.image_path, train.label_path, 10);
    const Dataset dt = mnist_reduced(pca, train.image_path, train.label_path);
    const Dataset dv = mnist_reduced(pca, val.image_path, val.label_path);
    REQUIRE(dt.size() == 400);
    REQUIRE(dv.size() == 150);
    REQUIRE(dv.n_features == 10);
    // deterministic: refit gives identical projections
    const PcaModel pca2 = fit_mnist_reduction(train.image_path, train.label_path, 10);
    const Dataset dt2 = mnist_reduced(pca2, train.image_path, train.label_path);
    REQUIRE(dt2.samples == dt.samples);
}

TEST_CASE("two-layer network learns the reduced digit set") {
    const SynthSet train_files = write_synthetic_idx("train2l", 40, 408);
    const SynthSet val_files = write_synthetic_idx("val2l", 15, 409);
    const PcaModel pca = fit_mnist_reduction(train_files.image_path, train_files.label_path, 10);
    const Dataset train_set = mnist_reduced(pca, train_files.image_path, train_files.label_path);
    const Dataset val_set = mnist_reduced(pca, val_files.image_path, val_files.label_path);

    OnnModel m = make_onn(MeshKind::bokun, 10, 2, {Activation::modrelu});
    rng::Sequence rng(410);
    for (auto& layer : m.layers)
        for (auto& p : layer.phases)
            p = {rng.uniform() * 2 * numeric::pi, rng.uniform() * 2 * numeric::pi};
    TrainingConfig cfg;
    cfg.epochs = 40;
    cfg.batch_size = 16;
    cfg.learning_rate = 0.05;
    cfg.seed = 411;
    train(m, train_set, cfg);
    REQUIRE(evaluate_accuracy(m, val_set, {}, 0.0, 1) >= 0.75);
}
