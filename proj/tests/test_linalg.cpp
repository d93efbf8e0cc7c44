#include <catch2/catch_amalgamated.hpp>

#include "mzmesh/linalg.hpp"
#include "mzmesh/mzi.hpp"
#include "mzmesh/propagation.hpp"
#include "mzmesh/topology.hpp"
#include "test_util.hpp"

using namespace mzmesh;

TEST_CASE("matmul basics") {
    rng::Sequence rng(42);
    const CMatrix m = testutil::random_matrix(2, 2, rng);
    const CMatrix i2 = CMatrix::identity(2);
    REQUIRE(max_abs_diff(matmul(i2, m), m) == 0.0);

    // cross-state block squared routes back: entry magnitudes match identity
    const CMatrix cross = mzi_transfer(cross_state());
    const CMatrix twice = matmul(cross, cross);
    REQUIRE(std::abs(std::abs(twice(0, 0)) - 1.0) < 1e-12);
    REQUIRE(std::abs(std::abs(twice(1, 1)) - 1.0) < 1e-12);
    REQUIRE(std::abs(twice(0, 1)) < 1e-12);
    REQUIRE(std::abs(twice(1, 0)) < 1e-12);
}

TEST_CASE("matmul agrees with triple-loop oracle") {
    rng::Sequence rng(7);
    for (int trial = 0; trial < 8; ++trial) {
        const CMatrix a = testutil::random_matrix(3, 3, rng);
        const CMatrix b = testutil::random_matrix(3, 3, rng);
        REQUIRE(max_abs_diff(matmul(a, b), testutil::matmul_oracle(a, b)) < 1e-12);
    }
}

TEST_CASE("matmul rejects dimension mismatch") {
    CMatrix a(2, 3), b(2, 2);
    REQUIRE_THROWS_AS(matmul(a, b), std::invalid_argument);
    REQUIRE_THROWS_AS(matvec(a, CVector(2)), std::invalid_argument);
}

TEST_CASE("matmul associativity on random triples") {
    rng::Sequence rng(11);
    for (int trial = 0; trial < 5; ++trial) {
        const CMatrix a = testutil::random_matrix(4, 4, rng);
        const CMatrix b = testutil::random_matrix(4, 4, rng);
        const CMatrix c = testutil::random_matrix(4, 4, rng);
        REQUIRE(max_abs_diff(matmul(matmul(a, b), c), matmul(a, matmul(b, c))) < 1e-10);
    }
}

TEST_CASE("dagger") {
    REQUIRE(max_abs_diff(dagger(CMatrix::identity(3)), CMatrix::identity(3)) == 0.0);

    rng::Sequence rng(3);
    const CMatrix m = testutil::random_matrix(3, 2, rng);
    REQUIRE(max_abs_diff(dagger(dagger(m)), m) == 0.0);

    const CMatrix u = mzi_transfer({0.7, 0.3});
    REQUIRE(max_abs_diff(matmul(dagger(u), u), CMatrix::identity(2)) < 1e-12);
}

TEST_CASE("unitarity_defect") {
    REQUIRE(unitarity_defect(CMatrix::identity(5)) == 0.0);
    REQUIRE_THROWS_AS(unitarity_defect(CMatrix(2, 3)), std::invalid_argument);

    rng::Sequence rng(19);
    MeshState s = make_state(build_clements(6));
    for (int trial = 0; trial < 50; ++trial) {
        for (auto& p : s.phases) p = {rng.uniform() * 2 * numeric::pi, rng.uniform() * 2 * numeric::pi};
        REQUIRE(unitarity_defect(transfer_matrix(s)) < 1e-12);
    }
}

TEST_CASE("lossy mesh transfer stays passive") {
    rng::Sequence rng(23);
    MeshState s = make_state(build_clements(6));
    for (auto& p : s.phases) p = {rng.uniform() * 2 * numeric::pi, rng.uniform() * 2 * numeric::pi};
    set_uniform_loss(s, 0.5);
    const CMatrix u = transfer_matrix(s);
    REQUIRE(unitarity_defect(u) > 0.0);
    const auto svs = singular_values(u);
    for (double sv : svs) REQUIRE(sv <= 1.0 + 1e-10);
}

TEST_CASE("embed_2x2") {
    REQUIRE(max_abs_diff(embed_2x2(CMatrix::identity(2), 4, 1, 2), CMatrix::identity(4)) == 0.0);

    // cross block swaps the two embedded ports
    const CMatrix e = embed_2x2(mzi_transfer(cross_state()), 3, 0, 1);
    const CVector out = matvec(e, CVector{1.0, 0.0, 0.0});
    REQUIRE(std::abs(out[0]) < 1e-12);
    REQUIRE(std::abs(std::abs(out[1]) - 1.0) < 1e-12);

    const CMatrix em = embed_2x2(mzi_transfer({1.1, 2.2}), 5, 1, 3);
    REQUIRE(unitarity_defect(em) < 1e-12);

    REQUIRE_THROWS_AS(embed_2x2(CMatrix::identity(2), 3, 2, 2), std::invalid_argument);
    REQUIRE_THROWS_AS(embed_2x2(CMatrix::identity(3), 4, 0, 1), std::invalid_argument);
}

TEST_CASE("power conservation under unitary application") {
    rng::Sequence rng(31);
    MeshState s = make_state(build_bokun(6));
    for (int trial = 0; trial < 20; ++trial) {
        for (auto& p : s.phases) p = {rng.uniform() * 2 * numeric::pi, rng.uniform() * 2 * numeric::pi};
        CVector v(s.topology.total_ports());
        for (auto& z : v) z = Complex(rng.uniform() - 0.5, rng.uniform() - 0.5);
        const double pin = power(v);
        const double pout = power(apply_mesh(s, v));
        REQUIRE(std::abs(pout - pin) < 1e-10 * pin);
    }
}
