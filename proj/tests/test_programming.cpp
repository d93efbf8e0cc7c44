#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>

#include "mzmesh/programming.hpp"
#include "test_util.hpp"

using namespace mzmesh;
using numeric::pi;

namespace {

MeshState random_state(const MeshTopology& t, std::uint64_t seed) {
    rng::Sequence rng(seed);
    MeshState s = make_state(t);
    for (auto& p : s.phases) p = {rng.uniform() * 2 * pi, rng.uniform() * 2 * pi};
    for (auto& p : s.input_shifter_phases) p = rng.uniform() * 2 * pi;
    return s;
}

CMatrix main_block(const MeshState& s) {
    const auto& t = s.topology;
    const CMatrix full = transfer_matrix(s);
    CMatrix u(t.n_main, t.n_main);
    for (int i = 0; i < t.n_main; ++i)
        for (int j = 0; j < t.n_main; ++j) u(i, j) = full(t.port_index(i + 1), t.port_index(j + 1));
    return u;
}

}  // namespace

TEST_CASE("monitoring plan existence matches accessibility") {
    for (MeshKind k : {MeshKind::reck, MeshKind::clements, MeshKind::diamond, MeshKind::bokun}) {
        const MeshTopology t = build_mesh(k, 8);
        const auto acc = independently_accessible(t);
        const std::set<int> acc_set(acc.begin(), acc.end());
        for (int id = 0; id < static_cast<int>(t.placements.size()); ++id) {
            REQUIRE(monitoring_plan(t, id).has_value() == (acc_set.count(id) == 1));
        }
    }
    // reck: plans exist for exactly the 13 outer-edge MZIs
    const MeshTopology reck = build_reck(8);
    int plans = 0;
    for (int id = 0; id < static_cast<int>(reck.placements.size()); ++id)
        if (monitoring_plan(reck, id)) ++plans;
    REQUIRE(plans == 13);
}

TEST_CASE("clements interior MZIs have no monitoring plan") {
    const MeshTopology t = build_clements(8);
    for (const auto& p : t.placements) {
        if (p.stage == 6 && p.top_wg == 4) REQUIRE(!monitoring_plan(t, p.id).has_value());
        if (p.stage == 8) REQUIRE(!monitoring_plan(t, p.id).has_value());
    }
}

TEST_CASE("monitored theta matches the programmed value") {
    const MeshTopology t = build_bokun(8);
    const MeshState s = random_state(t, 91);
    for (int id = 0; id < static_cast<int>(t.placements.size()); ++id) {
        const auto plan = monitoring_plan(t, id);
        REQUIRE(plan.has_value());
        const MonitorResult m = monitor_theta(s, *plan);
        const double err = std::abs(numeric::wrap_pm_pi(m.theta - s.phases[id].theta));
        REQUIRE(err < 0.01 * pi);
        REQUIRE(m.fit_residual < 1e-6);
        REQUIRE(m.fit_amplitude > 0.0);  // weak but not dark routes still fit
    }
}

TEST_CASE("monitored theta at exactly zero") {
    const MeshTopology t = build_bokun(8);
    MeshState s = random_state(t, 92);
    const auto plan = monitoring_plan(t, 5);
    REQUIRE(plan.has_value());
    s.phases[5].theta = 0.0;
    const MonitorResult m = monitor_theta(s, *plan);
    const double err = std::min(m.theta, 2 * pi - m.theta);
    REQUIRE(err < 1e-6);
}

TEST_CASE("monitoring reads the effective phase under crosstalk") {
    const MeshTopology t = build_bokun(8);
    MeshState s = random_state(t, 93);
    s.crosstalk.coefficient = 0.01;
    const auto eff = apply_crosstalk(s);
    for (int id : {0, 7, 19, 33}) {
        const auto plan = monitoring_plan(t, id);
        REQUIRE(plan.has_value());
        const MonitorResult m = monitor_theta(s, *plan);
        const double err = std::abs(numeric::wrap_pm_pi(m.theta - numeric::wrap_2pi(eff[id].theta)));
        REQUIRE(err < 0.01 * pi);
    }
}

TEST_CASE("ex-situ programming rejects meshes with inaccessible MZIs") {
    const MeshTopology t = build_clements(8);
    const MeshState s = make_state(t);
    const std::vector<MziPhases> target(t.placements.size(), MziPhases{1.0, 0.5});
    try {
        program_ex_situ(s, target, 10);
        FAIL("expected rejection");
    } catch (const std::invalid_argument& e) {
        REQUIRE(std::string(e.what()).find("not independently accessible") != std::string::npos);
    }
}

TEST_CASE("ex-situ programming converges under crosstalk") {
    const MeshTopology t = build_bokun(8);
    MeshState s = make_state(t);
    s.crosstalk.coefficient = 0.01;
    rng::Sequence rng(94);
    std::vector<MziPhases> target(t.placements.size());
    for (auto& p : target) p = {rng.uniform() * 2 * pi, rng.uniform() * 2 * pi};

    const ProgrammingResult r = program_ex_situ(s, target, 10);
    REQUIRE(r.converged);
    REQUIRE(r.residual < 0.01);

    // the error is non-increasing in the iteration budget
    double prev = std::numeric_limits<double>::infinity();
    for (int k = 1; k <= 5; ++k) {
        const ProgrammingResult rk = program_ex_situ(s, target, k, 2.2e-6, 0.0);
        REQUIRE(rk.residual <= prev + 1e-9);
        prev = rk.residual;
    }
}

TEST_CASE("ex-situ programming without disturbance settles immediately") {
    const MeshTopology t = build_bokun(8);
    const MeshState s = make_state(t);
    rng::Sequence rng(95);
    std::vector<MziPhases> target(t.placements.size());
    for (auto& p : target) p = {rng.uniform() * 2 * pi, rng.uniform() * 2 * pi};
    const ProgrammingResult r = program_ex_situ(s, target, 10);
    REQUIRE(r.iterations == 1);
    REQUIRE(r.residual < 1e-6);
}

TEST_CASE("ex-situ programming time follows the iteration budget") {
    const MeshTopology t = build_bokun(8);
    MeshState s = make_state(t);
    s.crosstalk.coefficient = 0.01;
    rng::Sequence rng(96);
    std::vector<MziPhases> target(t.placements.size());
    for (auto& p : target) p = {rng.uniform() * 2 * pi, rng.uniform() * 2 * pi};
    const ProgrammingResult r = program_ex_situ(s, target, 10, 2.2e-6, 0.0);
    REQUIRE(r.iterations == 10);
    REQUIRE(std::abs(r.t_prog_seconds - 22e-6) < 1e-12);
}

TEST_CASE("in-situ programming reaches an already realized target") {
    const MeshTopology t = build_clements(4);
    const MeshState s = random_state(t, 97);
    const CMatrix target = main_block(s);
    const ProgrammingResult r = program_in_situ(s, target, 10);
    REQUIRE(r.residual < 1e-8);
    REQUIRE(r.iterations <= 3);
}

TEST_CASE("in-situ programming fits a random unitary on clements(4)") {
    rng::Sequence rng(98);
    const CMatrix target = testutil::random_unitary(4, rng);
    const MeshTopology t = build_clements(4);
    const MeshState start = random_state(t, 99);
    const ProgrammingResult r = program_in_situ(start, target, 200);
    REQUIRE(r.residual < 1e-3);
    REQUIRE(std::abs(r.t_prog_seconds - r.iterations * 2.2e-6) < 1e-12);
}

TEST_CASE("in-situ programming time for a 200-iteration budget") {
    const MeshTopology t = build_clements(4);
    const MeshState start = random_state(t, 100);
    // an unreachable target (not unitary) forces the full budget
    CMatrix target(4, 4);
    for (int i = 0; i < 4; ++i) target(i, i) = 2.0;
    const ProgrammingResult r = program_in_situ(start, target, 200, 2.2e-6, 0.05, 1e-12);
    REQUIRE(r.iterations == 200);
    REQUIRE(std::abs(r.t_prog_seconds - 440e-6) < 1e-12);
    REQUIRE(!r.converged);
}

TEST_CASE("monitoring leaves every bias untouched") {
    const MeshTopology t = build_bokun(6);
    const MeshState s = random_state(t, 120);
    const MeshState snapshot = s;
    const auto plan = monitoring_plan(t, 3);
    REQUIRE(plan.has_value());
    monitor_theta(s, *plan);
    for (std::size_t i = 0; i < s.phases.size(); ++i) {
        REQUIRE(s.phases[i].theta == snapshot.phases[i].theta);
        REQUIRE(s.phases[i].phi == snapshot.phases[i].phi);
    }
}
