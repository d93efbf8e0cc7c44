#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace mzmesh {

enum class MeshKind { reck, clements, diamond, bokun };

inline const char* kind_name(MeshKind k) {
    switch (k) {
        case MeshKind::reck: return "reck";
        case MeshKind::clements: return "clements";
        case MeshKind::diamond: return "diamond";
        case MeshKind::bokun: return "bokun";
    }
    return "?";
}

inline MeshKind kind_from_name(const std::string& s) {
    if (s == "reck") return MeshKind::reck;
    if (s == "clements") return MeshKind::clements;
    if (s == "diamond") return MeshKind::diamond;
    if (s == "bokun") return MeshKind::bokun;
    throw std::invalid_argument("unknown mesh kind: '" + s + "'");
}

// One MZI on the (stage, waveguide-pair) lattice. Couples waveguides top_wg
// and top_wg+1. Main waveguides are 1..N; auxiliary ones sit at indices <= 0
// above the mesh and > N below it.
struct MziPlacement {
    int id;
    int stage;   // column index, >= 1
    int top_wg;  // upper waveguide of the coupled pair
};

struct MeshTopology {
    MeshKind kind{};
    int n_main = 0;
    std::vector<MziPlacement> placements;    // sorted by (stage, top_wg); id == index
    int min_wg = 1, max_wg = 1;              // inclusive waveguide range
    int input_phase_shifters = 0;            // N for reck, 0 otherwise

    int num_stages() const {
        int m = 0;
        for (const auto& p : placements) m = std::max(m, p.stage);
        return m;
    }

    int total_ports() const { return max_wg - min_wg + 1; }

    // Row/column index of a waveguide in transfer matrices and field vectors.
    int port_index(int wg) const {
        if (wg < min_wg || wg > max_wg) throw std::out_of_range("port_index: waveguide out of range");
        return wg - min_wg;
    }

    int wg_of_port(int index) const { return min_wg + index; }

    bool is_main_wg(int wg) const { return wg >= 1 && wg <= n_main; }

    std::vector<int> main_wgs() const {
        std::vector<int> v(n_main);
        for (int i = 0; i < n_main; ++i) v[i] = i + 1;
        return v;
    }

    std::vector<int> aux_wgs() const {
        std::vector<int> v;
        for (int w = min_wg; w <= max_wg; ++w)
            if (!is_main_wg(w)) v.push_back(w);
        return v;
    }

    // Placement ids grouped by stage (1-based stages; index 0 unused).
    std::vector<std::vector<int>> stage_table() const {
        std::vector<std::vector<int>> t(num_stages() + 1);
        for (const auto& p : placements) t[p.stage].push_back(p.id);
        return t;
    }
};

inline std::size_t mzi_count(MeshKind kind, int n) {
    if (n < 2) throw std::invalid_argument("mzi_count: mesh size must be >= 2");
    switch (kind) {
        case MeshKind::reck:
        case MeshKind::clements:
            return static_cast<std::size_t>(n) * (n - 1) / 2;
        case MeshKind::diamond:
            return static_cast<std::size_t>(n - 1) * (n - 1);
        case MeshKind::bokun:
            if (n % 2 != 0) throw std::invalid_argument("mzi_count: bokun mesh size must be even");
            return static_cast<std::size_t>(n) * (3 * n - 4) / 4;
    }
    throw std::logic_error("mzi_count: bad kind");
}

namespace detail {

inline MeshTopology finish(MeshKind kind, int n, std::vector<MziPlacement> pl, int min_wg, int max_wg,
                           int input_shifters = 0) {
    std::sort(pl.begin(), pl.end(), [](const MziPlacement& a, const MziPlacement& b) {
        return a.stage != b.stage ? a.stage < b.stage : a.top_wg < b.top_wg;
    });
    for (std::size_t i = 0; i < pl.size(); ++i) pl[i].id = static_cast<int>(i);
    MeshTopology t;
    t.kind = kind;
    t.n_main = n;
    t.placements = std::move(pl);
    t.min_wg = min_wg;
    t.max_wg = max_wg;
    t.input_phase_shifters = input_shifters;
    return t;
}

}  // namespace detail

// Triangle of diagonals with N-1, N-2, ..., 1 MZIs; diagonal d starts at the
// bottom pair in stage 2d-1 and climbs one waveguide per stage. N extra phase
// shifters sit on the input ports.
inline MeshTopology build_reck(int n) {
    if (n < 2) throw std::invalid_argument("build_reck: mesh size must be >= 2");
    std::vector<MziPlacement> pl;
    for (int d = 1; d < n; ++d)
        for (int w = n - 1; w >= d; --w) pl.push_back({0, 2 * d - 1 + (n - 1 - w), w});
    return detail::finish(MeshKind::reck, n, std::move(pl), 1, n, n);
}

// Rectangle of N stages; odd stages couple (1,2),(3,4),... and even stages
// (2,3),(4,5),... so neighbors cross at the first opportunity.
inline MeshTopology build_clements(int n) {
    if (n < 2 || n % 2 != 0) throw std::invalid_argument("build_clements: mesh size must be even and >= 2");
    std::vector<MziPlacement> pl;
    for (int s = 1; s <= n; ++s) {
        const int first = (s % 2 == 1) ? 1 : 2;
        const int last = (s % 2 == 1) ? n - 1 : n - 2;
        for (int w = first; w <= last; w += 2) pl.push_back({0, s, w});
    }
    return detail::finish(MeshKind::clements, n, std::move(pl), 1, n);
}

// Symmetric diamond over 2N-3 stages with column sizes 1,2,...,N-1,...,2,1 and
// 2N-2 waveguides; main channels ride the top N waveguides, the extra-MZI
// waveguides below are left as open auxiliary ports.
inline MeshTopology build_diamond(int n) {
    if (n < 2) throw std::invalid_argument("build_diamond: mesh size must be >= 2");
    std::vector<MziPlacement> pl;
    const int stages = 2 * n - 3;
    for (int s = 1; s <= stages; ++s) {
        const int k = s <= n - 1 ? s : 2 * n - 2 - s;
        for (int j = 0; j < k; ++j) pl.push_back({0, s, n - k + 2 * j});
    }
    return detail::finish(MeshKind::diamond, n, std::move(pl), 1, std::max(n, 2 * n - 2), 0);
}

// Clements rectangle plus triangular caps above and below: cap level k
// (counting outward) holds N/2 - k MZIs at stages k+1, k+3, ..., N-k-1 on the
// pair (1-k, 2-k), mirrored below on (N+k-1, N+k). Each cap waveguide carries
// one auxiliary input and one auxiliary output.
inline MeshTopology build_bokun(int n) {
    if (n < 2 || n % 2 != 0) throw std::invalid_argument("build_bokun: mesh size must be even and >= 2");
    MeshTopology base = build_clements(n);
    std::vector<MziPlacement> pl = base.placements;
    for (int k = 1; k <= n / 2 - 1; ++k)
        for (int s = k + 1; s <= n - k - 1; s += 2) {
            pl.push_back({0, s, 1 - k});
            pl.push_back({0, s, n + k - 1});
        }
    const int cap = n / 2 - 1;
    return detail::finish(MeshKind::bokun, n, std::move(pl), 1 - cap, n + cap, 0);
}

inline MeshTopology build_mesh(MeshKind kind, int n) {
    switch (kind) {
        case MeshKind::reck: return build_reck(n);
        case MeshKind::clements: return build_clements(n);
        case MeshKind::diamond: return build_diamond(n);
        case MeshKind::bokun: return build_bokun(n);
    }
    throw std::logic_error("build_mesh: bad kind");
}

struct StructuralReport {
    MeshKind kind{};
    int n = 0;
    std::size_t mzi_count = 0;
    int depth = 0;      // max MZIs on any directed input->output path
    int min_path = 0;   // over main-input -> main-output paths
    int max_path = 0;
    std::vector<int> accessible_ids;
    double accessible_fraction = 0.0;
};

namespace detail {

// Min/max number of MZIs encountered from any waveguide in `starts` to each
// waveguide's output. An MZI on a waveguide is always entered; values merge at
// every coupler.
struct PathSpans {
    std::map<int, int> min_at, max_at;  // wg -> count, only reachable wgs
};

inline PathSpans path_spans(const MeshTopology& t, const std::vector<int>& starts) {
    std::map<int, std::pair<int, int>> reach;  // wg -> (min,max)
    for (int w : starts) reach[w] = {0, 0};
    const auto stage_tab = t.stage_table();
    for (int s = 1; s < static_cast<int>(stage_tab.size()); ++s) {
        std::map<int, std::pair<int, int>> next = reach;
        for (int id : stage_tab[s]) {
            const int a = t.placements[id].top_wg;
            const int b = a + 1;
            const auto ia = reach.find(a);
            const auto ib = reach.find(b);
            if (ia == reach.end() && ib == reach.end()) {
                next.erase(a);
                next.erase(b);
                continue;
            }
            int mn = INT32_MAX, mx = INT32_MIN;
            for (auto it : {ia, ib}) {
                if (it == reach.end()) continue;
                mn = std::min(mn, it->second.first);
                mx = std::max(mx, it->second.second);
            }
            next[a] = next[b] = {mn + 1, mx + 1};
        }
        reach = std::move(next);
    }
    PathSpans out;
    for (const auto& [w, mm] : reach) {
        out.min_at[w] = mm.first;
        out.max_at[w] = mm.second;
    }
    return out;
}

// Lit-cone propagation: wgs in `sources` are lit at the input; an MZI with any
// lit input lights both outputs. Records each MZI's input lighting and
// optionally forces one MZI to spread regardless of its inputs.
struct Cone {
    std::vector<std::pair<bool, bool>> mzi_inputs;  // by placement id
};

inline Cone light_cone(const MeshTopology& t, const std::vector<int>& sources, int spreader_id = -1) {
    std::set<int> lit(sources.begin(), sources.end());
    Cone cone;
    cone.mzi_inputs.assign(t.placements.size(), {false, false});
    const auto stage_tab = t.stage_table();
    for (int s = 1; s < static_cast<int>(stage_tab.size()); ++s) {
        std::vector<std::pair<int, bool>> updates;
        for (int id : stage_tab[s]) {
            const int a = t.placements[id].top_wg;
            const int b = a + 1;
            const bool la = lit.count(a) > 0, lb = lit.count(b) > 0;
            cone.mzi_inputs[id] = {la, lb};
            const bool out = la || lb || id == spreader_id;
            updates.push_back({a, out});
            updates.push_back({b, out});
        }
        for (const auto& [w, on] : updates) {
            if (on) lit.insert(w);
            else lit.erase(w);
        }
    }
    return cone;
}

inline int next_mzi_on_wg(const MeshTopology& t, int wg, int after_stage) {
    int best = -1, best_stage = INT32_MAX;
    for (const auto& p : t.placements) {
        if (p.stage <= after_stage) continue;
        if (p.top_wg == wg || p.top_wg + 1 == wg) {
            if (p.stage < best_stage) {
                best_stage = p.stage;
                best = p.id;
            }
        }
    }
    return best;
}

}  // namespace detail

// Witness route for monitoring one MZI through the main/auxiliary I/Os without
// touching any other bias: light one input so that exactly one input of the
// target is lit, then follow a path to an output on which every subsequent
// MZI keeps its off-path input dark even with the target spreading both ways.
struct MonitorRoute {
    int mzi_id = -1;
    int input_wg = 0;      // waveguide carrying the probe light
    int output_wg = 0;     // waveguide read by the detector
    bool entry_top = false;  // which target input is lit
    bool exit_top = false;   // which target output continues on the path
    std::vector<int> downstream_ids;  // MZIs traversed after the target
    // Transmission follows A*sin^2(theta/2) when entry and exit are on the
    // same side, A*cos^2(theta/2) otherwise.
    bool sin_sense() const { return entry_top == exit_top; }
};

inline std::optional<MonitorRoute> find_monitor_route(const MeshTopology& t, int mzi_id) {
    if (mzi_id < 0 || mzi_id >= static_cast<int>(t.placements.size()))
        throw std::invalid_argument("find_monitor_route: bad mzi id");
    const auto& m = t.placements[mzi_id];
    for (int input = t.min_wg; input <= t.max_wg; ++input) {
        const auto plain = detail::light_cone(t, {input});
        const auto [la, lb] = plain.mzi_inputs[mzi_id];
        if (la == lb) continue;  // need exactly one lit input
        const auto spread = detail::light_cone(t, {input}, mzi_id);
        // DFS over (wg, stage) continuations from the target's two outputs.
        struct Node { int wg, stage; std::vector<int> path; bool from_top; };
        std::vector<Node> stack{{m.top_wg, m.stage, {}, true}, {m.top_wg + 1, m.stage, {}, false}};
        std::set<std::pair<int, int>> seen;
        while (!stack.empty()) {
            Node cur = stack.back();
            stack.pop_back();
            if (!seen.insert({cur.wg, cur.stage}).second) continue;
            const int nxt = detail::next_mzi_on_wg(t, cur.wg, cur.stage);
            if (nxt < 0) {
                MonitorRoute r;
                r.mzi_id = mzi_id;
                r.input_wg = input;
                r.output_wg = cur.wg;
                r.entry_top = la;
                r.exit_top = cur.from_top;
                r.downstream_ids = cur.path;
                return r;
            }
            const auto& np = t.placements[nxt];
            const auto [xla, xlb] = spread.mzi_inputs[nxt];
            const bool off_path_lit = (cur.wg == np.top_wg) ? xlb : xla;
            if (off_path_lit) continue;
            auto path = cur.path;
            path.push_back(nxt);
            stack.push_back({np.top_wg, np.stage, path, cur.from_top});
            stack.push_back({np.top_wg + 1, np.stage, std::move(path), cur.from_top});
        }
    }
    return std::nullopt;
}

inline std::vector<int> independently_accessible(const MeshTopology& t) {
    std::vector<int> ids;
    for (int id = 0; id < static_cast<int>(t.placements.size()); ++id)
        if (find_monitor_route(t, id)) ids.push_back(id);
    return ids;
}

inline StructuralReport structural_report(const MeshTopology& t) {
    StructuralReport r;
    r.kind = t.kind;
    r.n = t.n_main;
    r.mzi_count = t.placements.size();

    std::vector<int> all;
    for (int w = t.min_wg; w <= t.max_wg; ++w) all.push_back(w);
    const auto span_all = detail::path_spans(t, all);
    for (const auto& [w, v] : span_all.max_at) r.depth = std::max(r.depth, v);

    const auto span_main = detail::path_spans(t, t.main_wgs());
    int mn = INT32_MAX, mx = 0;
    for (int w : t.main_wgs()) {
        const auto it = span_main.min_at.find(w);
        if (it == span_main.min_at.end()) continue;
        mn = std::min(mn, it->second);
        mx = std::max(mx, span_main.max_at.at(w));
    }
    r.min_path = mn == INT32_MAX ? 0 : mn;
    r.max_path = mx;

    r.accessible_ids = independently_accessible(t);
    r.accessible_fraction =
        r.mzi_count ? static_cast<double>(r.accessible_ids.size()) / static_cast<double>(r.mzi_count) : 0.0;
    return r;
}

}  // namespace mzmesh
