#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>

#include "support.hpp"

using namespace katr;
using namespace katr::test;

TEST_CASE("weights rescale by the maximum raw weight") {
    auto net = normalize(raw_graph(3, {{0, 1, 500}, {1, 2, 125}}));
    CHECK(net.weight_scale() == 500.0);
    double top = 0, low = 1;
    for (const auto& e : net.edges()) top = std::max(top, e.weight), low = std::min(low, e.weight);
    CHECK(top == 1.0);
    CHECK(low == doctest::Approx(0.25));
}

TEST_CASE("rating normalization") {
    SUBCASE("linear map onto (0,10]") {
        auto net = normalize(raw_graph(3, path_edges(3), {{0, 1, 1.0}, {1, 1, 3.0}, {2, 1, 5.0}}));
        std::vector<double> got;
        for (const auto& p : net.pois()) got.push_back(p.rating);
        CHECK(got == std::vector<double>{2.0, 6.0, 10.0});
        CHECK(net.rating_scale() == doctest::Approx(0.5));
    }
    SUBCASE("constant ratings stay constant") {
        auto net = normalize(raw_graph(3, path_edges(3), {{0, 1, 4.2}, {1, 2, 4.2}, {2, 3, 4.2}}));
        for (const auto& p : net.pois()) CHECK(p.rating == net.poi(0).rating);
    }
}

TEST_CASE("normalize rejects bad input") {
    auto code_of = [](const RawNetwork& raw) {
        try {
            normalize(raw);
        } catch (const Error& e) {
            return std::make_pair(e.code(), e.subject());
        }
        return std::make_pair(ErrorCode::io, std::int64_t{-2});
    };
    CHECK(code_of(RawNetwork{}).first == ErrorCode::empty_graph);
    CHECK(code_of(raw_graph(3, {{0, 1, 1}, {1, 2, 0}})) == std::make_pair(ErrorCode::non_positive_weight, std::int64_t{1}));
    CHECK(code_of(raw_graph(3, {{0, 1, -2}})) == std::make_pair(ErrorCode::non_positive_weight, std::int64_t{0}));
    CHECK(code_of(raw_graph(2, {{0, 1, 1}, {1, 7, 1}})) == std::make_pair(ErrorCode::unknown_vertex, std::int64_t{1}));
    CHECK(code_of(raw_graph(2, {{0, 0, 1}})).first == ErrorCode::invalid_input);
    auto dup = raw_graph(2, {{0, 1, 1}});
    dup.vertices.push_back(dup.vertices[0]);
    CHECK(code_of(dup).first == ErrorCode::invalid_input);
    CHECK(code_of(raw_graph(2, {{0, 1, 1}}, {{5, 0, 1}})).first == ErrorCode::unknown_vertex);
}

TEST_CASE("largest component kept, relabeled in input order") {
    // 10-11 alone, 20-21-22 kept.
    RawNetwork raw;
    for (std::int64_t id : {10, 20, 11, 21, 22}) raw.vertices.push_back({id, static_cast<double>(id), 0});
    raw.edges = {{10, 11, 1}, {20, 21, 2}, {21, 22, 2}, {22, 20, 3}, {21, 20, 1}};
    raw.pois = {{11, 0, 1}, {22, 0, 2}};
    auto net = normalize(raw, {false, false});
    REQUIRE(net.vertex_count() == 3);
    CHECK(net.original_id(0) == 20);
    CHECK(net.original_id(1) == 21);
    CHECK(net.original_id(2) == 22);
    CHECK(net.edge_count() == 3);
    CHECK(net.poi_count() == 1);
    const auto& r = net.ingest_report();
    CHECK(r.components == 2);
    CHECK(r.dropped_vertices == 2);
    CHECK(r.dropped_pois == 1);
    CHECK(r.duplicate_edges == 1);
    CHECK(shortest_distance(net, 0, 1) == 1.0);  // duplicate keeps the lighter weight
    CHECK_FALSE(net.internal_id(10).has_value());
}

TEST_CASE("shortest distances") {
    auto single = as_is(raw_graph(2, {{0, 1, 2.5}}));
    CHECK(shortest_distance(single, 0, 0) == 0.0);
    CHECK(shortest_distance(single, 0, 1) == 2.5);

    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        auto net = small_network(seed, 50, 2, 2, false);
        std::mt19937_64 rng(seed);
        for (int rep = 0; rep < 5; ++rep) {
            const auto s = static_cast<VertexId>(rng() % net.vertex_count());
            const auto bf = bellman_ford(net, s);
            const auto tree = dijkstra(net, s);
            for (std::size_t t = 0; t < net.vertex_count(); ++t) CHECK(tree.dist[t] == doctest::Approx(bf[t]).epsilon(1e-12));
        }
    }
}

TEST_CASE("shortest distance is symmetric and obeys the triangle inequality") {
    auto net = small_network(3, 120, 2, 2, false);
    std::mt19937_64 rng(11);
    for (int rep = 0; rep < 30; ++rep) {
        const auto a = static_cast<VertexId>(rng() % net.vertex_count());
        const auto b = static_cast<VertexId>(rng() % net.vertex_count());
        const auto c = static_cast<VertexId>(rng() % net.vertex_count());
        CHECK(shortest_distance(net, a, b) == doctest::Approx(shortest_distance(net, b, a)).epsilon(1e-12));
        CHECK(shortest_distance(net, a, c) <= shortest_distance(net, a, b) + shortest_distance(net, b, c) + 1e-12);
    }
}

TEST_CASE("equal-distance predecessors resolve to the smaller vertex") {
    // Two paths 0-1-3 and 0-2-3 of equal length.
    auto net = as_is(raw_graph(4, {{0, 2, 1}, {2, 3, 1}, {0, 1, 1}, {1, 3, 1}}));
    auto tree = dijkstra(net, 0);
    CHECK(tree.pred[3] == 1);
    CHECK(tree.path_to(3) == std::vector<VertexId>{0, 1, 3});
}

TEST_CASE("euclidean lower bound") {
    SUBCASE("geometric weights give c = 1") {
        auto raw = raw_graph(3, {{0, 1, 3}, {1, 2, 5}}, {}, {{0, 0}, {3, 0}, {3, 4}});
        auto net = as_is(raw);
        CHECK(net.euclid_coefficient() == doctest::Approx(1.0).epsilon(1e-11));
        CHECK(euclid_lower_bound(net, 0, 2) == doctest::Approx(5.0).epsilon(1e-11));
        CHECK(euclid_lower_bound(net, 1, 1) == 0.0);
        // Rescaling carries the coefficient into normalized units.
        auto scaled = normalize(raw);
        CHECK(scaled.euclid_coefficient() * scaled.weight_scale() == doctest::Approx(1.0).epsilon(1e-11));
    }
    SUBCASE("coincident endpoints degrade the bound to zero") {
        auto net = as_is(raw_graph(3, {{0, 1, 1}, {1, 2, 1}}, {}, {{0, 0}, {0, 0}, {1, 0}}));
        CHECK(net.euclid_coefficient() == 0.0);
        CHECK(euclid_lower_bound(net, 0, 2) == 0.0);
    }
    SUBCASE("bound never exceeds the graph distance") {
        for (bool integral : {false, true}) {
            auto net = small_network(5, 300, 2, 2, integral);
            std::mt19937_64 rng(5);
            for (int rep = 0; rep < 100; ++rep) {
                const auto s = static_cast<VertexId>(rng() % net.vertex_count());
                const auto t = static_cast<VertexId>(rng() % net.vertex_count());
                CHECK(euclid_lower_bound(net, s, t) <= shortest_distance(net, s, t));
            }
        }
    }
}

TEST_CASE("normalization preserves route and rating order") {
    auto raw = generate_synthetic(SyntheticParams{4, 200, 6, 3, 4, RatingDistribution::uniform, 0});
    auto plain = normalize(raw, {false, false});
    auto scaled = normalize(raw);
    std::mt19937_64 rng(4);
    for (int rep = 0; rep < 20; ++rep) {
        const auto s = static_cast<VertexId>(rng() % plain.vertex_count());
        const auto a = static_cast<VertexId>(rng() % plain.vertex_count());
        const auto b = static_cast<VertexId>(rng() % plain.vertex_count());
        const bool before = shortest_distance(plain, s, a) < shortest_distance(plain, s, b);
        const bool after = shortest_distance(scaled, s, a) < shortest_distance(scaled, s, b);
        CHECK(before == after);
    }
    for (std::size_t i = 1; i < plain.poi_count(); ++i)
        CHECK((plain.poi(0).rating < plain.poi(static_cast<PoiId>(i)).rating) ==
              (scaled.poi(0).rating < scaled.poi(static_cast<PoiId>(i)).rating));
}

TEST_CASE("text formats round-trip") {
    auto raw = generate_synthetic(SyntheticParams{9, 150, 6, 3, 4, RatingDistribution::stars, 0});
    const auto dir = std::filesystem::temp_directory_path() / "katr_graph_roundtrip";
    std::filesystem::remove_all(dir);
    write_raw_network_dir(raw, dir);
    auto back = read_raw_network_dir(dir);
    REQUIRE(back.vertices.size() == raw.vertices.size());
    REQUIRE(back.edges.size() == raw.edges.size());
    REQUIRE(back.pois.size() == raw.pois.size());
    for (std::size_t i = 0; i < raw.edges.size(); ++i) CHECK(back.edges[i].weight == raw.edges[i].weight);
    for (std::size_t i = 0; i < raw.vertices.size(); ++i) CHECK(back.vertices[i].lon == raw.vertices[i].lon);
    CHECK(back.tags == raw.tags);
    CHECK(normalize(back).fingerprint() == normalize(raw).fingerprint());
    std::filesystem::remove_all(dir);
}

TEST_CASE("parser skips comments and reports malformed lines") {
    const auto dir = std::filesystem::temp_directory_path() / "katr_graph_parse";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    auto put = [&](const char* name, const char* text) {
        std::ofstream(dir / name) << text;
    };
    put("vertices.txt", "# id lon lat\n0 0 0\n1 1 0   # trailing\n\n");
    put("edges.txt", "0 1 1.5\n");
    put("pois.txt", "1 3 4.5\n");
    auto raw = read_raw_network_dir(dir);
    CHECK(raw.vertices.size() == 2);
    CHECK(raw.edges.at(0).weight == 1.5);
    CHECK(raw.pois.at(0).keyword == 3);
    put("edges.txt", "0 1\n");
    CHECK_THROWS_AS(read_raw_network_dir(dir), Error);
    std::filesystem::remove_all(dir);
}

TEST_CASE("fingerprint tracks content") {
    auto a = as_is(raw_graph(3, path_edges(3)));
    auto b = as_is(raw_graph(3, path_edges(3, 2.0)));
    CHECK(a.fingerprint() == as_is(raw_graph(3, path_edges(3))).fingerprint());
    CHECK(a.fingerprint() != b.fingerprint());
}

TEST_CASE("tags fall back to a generated name") {
    auto raw = raw_graph(2, {{0, 1, 1}}, {{0, 4, 1}});
    raw.tags[4] = "cafe";
    auto net = as_is(raw);
    CHECK(net.tag(4) == "cafe");
    CHECK(net.tag(9) == "kw9");
}
