#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <queue>
#include <set>

#include "support.hpp"

using namespace katr;
using namespace katr::test;

namespace {

// Dijkstra confined to one subgraph's members.
std::vector<double> confined_dijkstra(const RoadNetwork& net, const PartitionIndex& pi, VertexId s) {
    std::vector<double> d(net.vertex_count(), kInfinity);
    using Item = std::pair<double, VertexId>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    d[static_cast<std::size_t>(s)] = 0;
    heap.emplace(0.0, s);
    const auto sg = pi.assignment(s);
    while (!heap.empty()) {
        auto [du, u] = heap.top();
        heap.pop();
        if (du > d[static_cast<std::size_t>(u)]) continue;
        for (const auto& a : net.neighbors(u)) {
            if (pi.assignment(a.to) != sg) continue;
            if (du + a.weight < d[static_cast<std::size_t>(a.to)]) {
                d[static_cast<std::size_t>(a.to)] = du + a.weight;
                heap.emplace(du + a.weight, a.to);
            }
        }
    }
    return d;
}

bool connected_inside(const RoadNetwork& net, const PartitionIndex& pi, const Subgraph& sg) {
    const auto d = confined_dijkstra(net, pi, sg.members.front());
    for (auto v : sg.members)
        if (!std::isfinite(d[static_cast<std::size_t>(v)])) return false;
    return true;
}

void check_structure(const RoadNetwork& net, const PartitionIndex& pi, std::size_t max_size) {
    std::vector<int> seen(net.vertex_count(), 0);
    for (const auto& sg : pi.subgraphs()) {
        CHECK(sg.size() <= max_size);
        CHECK(sg.size() >= 1);
        CHECK(connected_inside(net, pi, sg));
        CHECK(std::is_sorted(sg.members.begin(), sg.members.end()));
        for (auto v : sg.members) {
            ++seen[static_cast<std::size_t>(v)];
            CHECK(pi.assignment(v) == sg.id);
        }
        for (auto b : sg.borders) {
            CHECK(pi.assignment(b) == sg.id);
            CHECK(pi.is_border(b));
        }
    }
    for (auto c : seen) CHECK(c == 1);

    std::set<std::pair<VertexId, VertexId>> crossing;
    for (const auto& e : net.edges())
        if (pi.assignment(e.u) != pi.assignment(e.v)) crossing.insert(std::minmax(e.u, e.v));
    std::set<std::pair<VertexId, VertexId>> listed;
    for (const auto& x : pi.external_edges()) {
        CHECK(x.u < x.v);
        CHECK(pi.assignment(x.u) != pi.assignment(x.v));
        CHECK(pi.is_border(x.u));
        CHECK(pi.is_border(x.v));
        CHECK(listed.insert({x.u, x.v}).second);
    }
    CHECK(listed == crossing);
    for (VertexId v = 0; v < static_cast<VertexId>(net.vertex_count()); ++v) {
        bool has_external = false;
        for (const auto& a : net.neighbors(v)) has_external |= pi.assignment(a.to) != pi.assignment(v);
        CHECK(pi.is_border(v) == has_external);
    }
}

}  // namespace

TEST_CASE("partition size must be at least two") {
    auto net = as_is(raw_graph(4, path_edges(4)));
    try {
        partition(net, 1);
        FAIL("accepted N_s = 1");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::invalid_partition_size);
    }
}

TEST_CASE("path graphs") {
    SUBCASE("whole graph fits") {
        auto net = as_is(raw_graph(4, path_edges(4)));
        auto pi = build_partition_index(net, 4);
        CHECK(pi.subgraph_count() == 1);
        CHECK(pi.external_edges().empty());
        CHECK(pi.subgraph(0).borders.empty());
    }
    SUBCASE("eight vertices, four per part") {
        auto net = as_is(raw_graph(8, path_edges(8)));
        auto pi = build_partition_index(net, 4);
        CHECK(pi.subgraph_count() >= 2);
        CHECK(pi.external_edges().size() == pi.subgraph_count() - 1);
        check_structure(net, pi, 4);
        // Each part of a path is a contiguous run.
        for (const auto& sg : pi.subgraphs())
            CHECK(sg.members.back() - sg.members.front() + 1 == static_cast<VertexId>(sg.size()));
    }
}

TEST_CASE("random networks: disjoint connected cover within the size bound") {
    for (std::uint64_t seed = 1; seed <= 6; ++seed) {
        auto net = small_network(seed, 400, 2, 2, false);
        for (std::size_t ns : {4u, 16u, 64u}) {
            auto pi = partition(net, ns);
            check_structure(net, pi, ns);
            auto again = partition(net, ns);
            CHECK(again.assignment() == pi.assignment());
        }
    }
}

TEST_CASE("partitioner seed changes the layout but not the guarantees") {
    auto net = small_network(2, 300, 2, 2, false);
    auto a = partition(net, 16, BfsGrowPartitioner(1));
    auto b = partition(net, 16, BfsGrowPartitioner(2));
    check_structure(net, b, 16);
    CHECK(a.assignment() != b.assignment());
}

TEST_CASE("intra distances") {
    SUBCASE("singleton subgraph") {
        auto net = as_is(raw_graph(3, path_edges(3)));
        auto pi = PartitionIndex::from_assignment(net, {0, 1, 1}, 2);
        build_intra_distances(pi, net);
        REQUIRE(pi.subgraph(0).size() == 1);
        CHECK(pi.subgraph(0).dist.size() == 1);
        CHECK(pi.intra_distance(0, 0) == 0.0);
    }
    SUBCASE("triangle 1,1,3") {
        auto net = as_is(raw_graph(3, {{0, 1, 1}, {1, 2, 1}, {0, 2, 3}}));
        auto pi = build_partition_index(net, 3);
        CHECK(pi.intra_distance(0, 2) == 2.0);
        CHECK(pi.intra_path(0, 2) == std::vector<VertexId>{0, 1, 2});
    }
    SUBCASE("restricted to intra paths, never below the global distance") {
        // Inside {0,1,2} the only route 0..2 is the heavy edge; outside
        // there is a shortcut through 3.
        auto net = as_is(raw_graph(4, {{0, 1, 5}, {1, 2, 5}, {0, 3, 1}, {3, 2, 1}}));
        auto pi = PartitionIndex::from_assignment(net, {0, 0, 0, 1}, 3);
        build_intra_distances(pi, net);
        CHECK(pi.intra_distance(0, 2) == 10.0);
        CHECK(shortest_distance(net, 0, 2) == 2.0);
    }
    SUBCASE("intra-disconnected pairs are infinite") {
        auto net = as_is(raw_graph(3, {{0, 2, 1}, {2, 1, 1}}));
        auto pi = PartitionIndex::from_assignment(net, {0, 0, 1}, 2);
        build_intra_distances(pi, net);
        CHECK(std::isinf(pi.intra_distance(0, 1)));
        CHECK(pi.intra_path(0, 1).empty());
    }
    SUBCASE("random pairs against full-graph and confined Dijkstra") {
        auto net = small_network(7, 300, 2, 2, false);
        auto pi = build_partition_index(net, 32);
        std::mt19937_64 rng(7);
        for (int rep = 0; rep < 20; ++rep) {
            const auto& sg = pi.subgraph(static_cast<SubgraphId>(rng() % pi.subgraph_count()));
            const auto a = sg.members[rng() % sg.size()];
            const auto b = sg.members[rng() % sg.size()];
            CHECK(pi.intra_distance(a, b) >= shortest_distance(net, a, b) - 1e-12);
            CHECK(pi.intra_distance(a, b) == doctest::Approx(confined_dijkstra(net, pi, a)[static_cast<std::size_t>(b)]).epsilon(1e-12));
            CHECK(pi.intra_distance(a, b) == pi.intra_distance(b, a));
            // The stored path is a real walk of that length inside sg.
            auto path = pi.intra_path(a, b);
            REQUIRE(!path.empty());
            double len = 0;
            for (std::size_t i = 1; i < path.size(); ++i) {
                CHECK(pi.assignment(path[i]) == sg.id);
                double w = kInfinity;
                for (const auto& arc : net.neighbors(path[i - 1]))
                    if (arc.to == path[i]) w = std::min(w, arc.weight);
                len += w;
            }
            CHECK(len == doctest::Approx(pi.intra_distance(a, b)).epsilon(1e-12));
        }
    }
}

TEST_CASE("border shortcuts") {
    SUBCASE("one border gives no shortcut") {
        auto net = as_is(raw_graph(4, path_edges(4)));
        auto pi = PartitionIndex::from_assignment(net, {0, 0, 0, 1}, 3);
        build_intra_distances(pi, net);
        CHECK(pi.subgraph(0).borders == std::vector<VertexId>{2});
        CHECK(pi.border_shortcuts(0).empty());
    }
    SUBCASE("two borders joined inside") {
        // 0 | 1 2 3 | 4 with the middle part bordering on both sides.
        auto net = as_is(raw_graph(5, {{0, 1, 1}, {1, 2, 2}, {2, 3, 3}, {3, 4, 1}}));
        auto pi = PartitionIndex::from_assignment(net, {0, 1, 1, 1, 2}, 3);
        build_intra_distances(pi, net);
        auto sc = pi.border_shortcuts(1);
        REQUIRE(sc.size() == 2);  // both directions
        for (const auto& s : sc) CHECK(s.distance == 5.0);
    }
    SUBCASE("unknown subgraph") {
        auto net = as_is(raw_graph(4, path_edges(4)));
        auto pi = build_partition_index(net, 4);
        try {
            pi.border_shortcuts(5);
            FAIL("no error");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::unknown_subgraph);
        }
    }
    SUBCASE("weights equal confined Dijkstra on random partitions") {
        for (std::uint64_t seed = 1; seed <= 3; ++seed) {
            auto net = small_network(seed, 250, 2, 2, false);
            auto pi = build_partition_index(net, 24);
            for (const auto& sg : pi.subgraphs()) {
                const auto scs = pi.border_shortcuts(sg.id);
                std::size_t finite = 0;
                for (auto a : sg.borders) {
                    const auto d = confined_dijkstra(net, pi, a);
                    for (auto b : sg.borders)
                        if (a != b && std::isfinite(d[static_cast<std::size_t>(b)])) ++finite;
                }
                CHECK(scs.size() == finite);
                for (const auto& s : scs) {
                    CHECK(s.from != s.to);
                    CHECK(s.distance == doctest::Approx(confined_dijkstra(net, pi, s.from)[static_cast<std::size_t>(s.to)]).epsilon(1e-12));
                }
            }
        }
    }
}

TEST_CASE("replacing a subgraph interior by border shortcuts keeps outside distances") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        auto net = small_network(seed, 300, 2, 2, true);
        auto pi = build_partition_index(net, 32);
        std::mt19937_64 rng(seed * 31);
        for (int rep = 0; rep < 4; ++rep) {
            const auto target = static_cast<SubgraphId>(rng() % pi.subgraph_count());
            const auto& sg = pi.subgraph(target);
            // Build the substituted graph: drop edges touching interior
            // vertices, add border shortcuts.
            std::set<VertexId> interior;
            for (auto v : sg.members)
                if (!pi.is_border(v)) interior.insert(v);
            RawNetwork raw;
            for (const auto& v : net.vertices()) raw.vertices.push_back({v.id, v.lon, v.lat});
            for (const auto& e : net.edges()) {
                if (interior.count(e.u) || interior.count(e.v)) continue;
                if (pi.assignment(e.u) == target && pi.assignment(e.v) == target) continue;
                raw.edges.push_back({e.u, e.v, e.weight});
            }
            for (const auto& s : pi.border_shortcuts(target))
                if (s.from < s.to) raw.edges.push_back({s.from, s.to, s.distance});
            // Interior vertices become isolated; keep them attached with a
            // huge edge so the component survives normalization.
            for (auto v : interior) raw.edges.push_back({v, sg.borders.empty() ? 0 : sg.borders[0], 1e12});
            auto reduced = normalize(raw, {false, false});
            REQUIRE(reduced.vertex_count() == net.vertex_count());
            for (int pair = 0; pair < 10; ++pair) {
                VertexId s, t;
                do s = static_cast<VertexId>(rng() % net.vertex_count());
                while (interior.count(s));
                do t = static_cast<VertexId>(rng() % net.vertex_count());
                while (interior.count(t));
                CHECK(shortest_distance(reduced, s, t) == shortest_distance(net, s, t));
            }
        }
    }
}

TEST_CASE("border skeleton distances are exact between borders") {
    auto net = small_network(4, 300, 2, 2, true);
    auto pi = build_partition_index(net, 24);
    BorderSkeleton sk(net, pi);
    std::mt19937_64 rng(4);
    for (int rep = 0; rep < 10; ++rep) {
        const auto a = static_cast<std::int32_t>(rng() % sk.node_count());
        std::vector<double> d(sk.node_count(), kInfinity);
        using Item = std::pair<double, std::int32_t>;
        std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
        d[static_cast<std::size_t>(a)] = 0;
        heap.emplace(0.0, a);
        while (!heap.empty()) {
            auto [du, u] = heap.top();
            heap.pop();
            if (du > d[static_cast<std::size_t>(u)]) continue;
            for (const auto& arc : sk.arcs(u))
                if (du + arc.weight < d[static_cast<std::size_t>(arc.to)]) {
                    d[static_cast<std::size_t>(arc.to)] = du + arc.weight;
                    heap.emplace(du + arc.weight, arc.to);
                }
        }
        const auto full = dijkstra(net, sk.vertex(a));
        for (std::int32_t b = 0; b < static_cast<std::int32_t>(sk.node_count()); ++b)
            CHECK(d[static_cast<std::size_t>(b)] == full.dist[static_cast<std::size_t>(sk.vertex(b))]);
    }
}

TEST_CASE("partition file round-trip and fingerprint rebuild") {
    const auto dir = std::filesystem::temp_directory_path() / "katr_partition_file";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    const auto file = dir / "p.katr";
    auto net = small_network(3, 200, 2, 2, false);
    auto pi = build_partition_index(net, 16);
    save_partition(pi, file);
    auto back = load_partition(file);
    CHECK(back.assignment() == pi.assignment());
    CHECK(back.network_fingerprint() == net.fingerprint());
    CHECK(back.has_intra_tables());
    REQUIRE(back.subgraph_count() == pi.subgraph_count());
    for (std::size_t i = 0; i < pi.subgraph_count(); ++i) {
        CHECK(back.subgraphs()[i].borders == pi.subgraphs()[i].borders);
        CHECK(back.subgraphs()[i].dist == pi.subgraphs()[i].dist);
    }
    CHECK(back.external_edges().size() == pi.external_edges().size());

    bool rebuilt = true;
    load_or_build_partition(net, file, 16, &rebuilt);
    CHECK_FALSE(rebuilt);
    load_or_build_partition(net, file, 20, &rebuilt);
    CHECK(rebuilt);
    auto other = small_network(4, 200, 2, 2, false);
    auto fresh = load_or_build_partition(other, file, 20, &rebuilt);
    CHECK(rebuilt);
    CHECK(fresh.network_fingerprint() == other.fingerprint());

    std::ofstream(file, std::ios::binary) << "garbage";
    CHECK_THROWS_AS(load_partition(file), Error);
    load_or_build_partition(net, file, 16, &rebuilt);
    CHECK(rebuilt);
    std::filesystem::remove_all(dir);
}
