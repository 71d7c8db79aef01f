#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <queue>
#include <set>
#include <sstream>

#include "katr/bench.hpp"
#include "support.hpp"

using namespace katr;
using namespace katr::test;

namespace {

const KatrIndex& shared_index() {
    static const KatrIndex ix = KatrIndex::build(small_network(21, 600, 8, 5, false), 32, 1u);
    return ix;
}

std::size_t largest_component(const RawNetwork& raw) {
    std::map<std::int64_t, std::vector<std::int64_t>> adj;
    for (const auto& v : raw.vertices) adj[v.id];
    for (const auto& e : raw.edges) adj[e.u].push_back(e.v), adj[e.v].push_back(e.u);
    std::set<std::int64_t> seen;
    std::size_t best = 0;
    for (const auto& [start, _] : adj) {
        if (seen.count(start)) continue;
        std::queue<std::int64_t> bfs;
        bfs.push(start);
        seen.insert(start);
        std::size_t size = 0;
        while (!bfs.empty()) {
            auto v = bfs.front();
            bfs.pop();
            ++size;
            for (auto w : adj[v])
                if (seen.insert(w).second) bfs.push(w);
        }
        best = std::max(best, size);
    }
    return best;
}

}  // namespace

TEST_CASE("config files") {
    auto c = Config::parse("# bench\nqueries = 50\nalpha=0.3  # trailing\nname = ny roads\n\nthreads = 2\nthreads = 4\npaths = false\n");
    CHECK(c.get("queries", std::size_t{1}) == 50);
    CHECK(c.get("alpha", 0.0) == 0.3);
    CHECK(c.get("name", std::string()) == "ny roads");
    CHECK(c.get("threads", std::size_t{0}) == 4);
    CHECK(c.get("paths", true) == false);
    CHECK(c.get("missing", 2.5) == 2.5);
    CHECK_FALSE(c.has("missing"));
    CHECK_THROWS_AS(Config::parse("just words\n"), Error);
    CHECK_THROWS_AS(c.get("name", 1.0), Error);
    CHECK_THROWS_AS(Config::parse("k = 2.5").get("k", std::size_t{1}), Error);
    CHECK_THROWS_AS(Config::load("/nonexistent/katr.conf"), Error);
}

TEST_CASE("number lists") {
    CHECK(parse_number_list("2..4,6") == std::vector<double>{2, 3, 4, 6});
    CHECK(parse_number_list("0.1, 0.5") == std::vector<double>{0.1, 0.5});
    CHECK_THROWS_AS(parse_number_list(""), Error);
    CHECK_THROWS_AS(parse_number_list("4..2"), Error);
    CHECK_THROWS_AS(parse_number_list("a"), Error);
}

TEST_CASE("synthetic generator") {
    SyntheticParams p;
    p.vertices = 1;
    CHECK_THROWS_AS(generate_synthetic(p), Error);
    p.vertices = 2000;
    p.seed = 3;
    auto raw = generate_synthetic(p);
    CHECK(raw.vertices.size() == 2000);
    CHECK(raw.pois.size() == p.keywords * p.pois_per_keyword);
    CHECK(largest_component(raw) >= 1900);
    const double degree = 2.0 * static_cast<double>(raw.edges.size()) / 2000.0;
    CHECK(degree == doctest::Approx(p.avg_degree).epsilon(0.01));
    auto net = normalize(raw, NormalizeOptions{false, true});
    CHECK(net.euclid_coefficient() == doctest::Approx(1.0).epsilon(1e-9));
    for (const auto& v : raw.vertices) {
        CHECK(v.lon >= 0.0);
        CHECK(v.lon <= 1.0);
    }
    auto again = generate_synthetic(p);
    CHECK(normalize(again).fingerprint() == normalize(raw).fingerprint());
    p.seed = 4;
    CHECK(normalize(generate_synthetic(p)).fingerprint() != normalize(raw).fingerprint());
    SUBCASE("integer weights") {
        p.integer_weight_scale = 1000;
        for (const auto& e : generate_synthetic(p).edges) CHECK(e.weight == std::ceil(e.weight));
    }
    SUBCASE("rating distributions") {
        p.ratings = RatingDistribution::stars;
        for (const auto& poi : generate_synthetic(p).pois) {
            CHECK(poi.rating >= 3.0);
            CHECK(poi.rating <= 5.0);
            CHECK(poi.rating * 2 == std::floor(poi.rating * 2));
        }
        CHECK(parse_rating_distribution("uniform") == RatingDistribution::uniform);
        CHECK_THROWS_AS(parse_rating_distribution("zipf"), Error);
    }
}

TEST_CASE("workloads") {
    const auto& ix = shared_index();
    WorkloadParams w;
    w.queries = 20;
    w.m_values = {1, 3};
    w.k_values = {2};
    w.alpha_values = {0.2, 0.8};
    auto a = generate_workload(ix, w);
    auto b = generate_workload(ix, w);
    CHECK(a.size() == 80);
    std::set<KeywordId> coverable;
    for (auto k : keywords_with_pois(ix)) coverable.insert(k);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].id == i);
        CHECK(a[i].query.source == b[i].query.source);
        CHECK(a[i].query.keywords == b[i].query.keywords);
        CHECK(a[i].query.alpha == b[i].query.alpha);
        std::set<KeywordId> distinct(a[i].query.keywords.begin(), a[i].query.keywords.end());
        CHECK(distinct.size() == a[i].query.keywords.size());
        for (auto k : a[i].query.keywords) CHECK(coverable.count(k) == 1);
        CHECK_NOTHROW(validate_query(ix, a[i].query));
    }
    w.seed = 8;
    auto c = generate_workload(ix, w);
    bool differs = false;
    for (std::size_t i = 0; i < a.size(); ++i) differs = differs || a[i].query.source != c[i].query.source;
    CHECK(differs);
    w.m_values = {9};
    CHECK_THROWS_AS(generate_workload(ix, w), Error);
}

TEST_CASE("variants") {
    CHECK(parse_variant("nosg") == Variant::nosg);
    CHECK(to_string(Variant::noed) == "noed");
    CHECK_THROWS_AS(parse_variant("fast"), Error);
    CHECK_FALSE(variant_options(Variant::nosr).safe_region);
    CHECK_FALSE(variant_options(Variant::nosg).subgraph_pruning);
    CHECK_FALSE(variant_options(Variant::noed).edrs_early_stop);
    auto full = variant_options(Variant::full);
    CHECK((full.safe_region && full.subgraph_pruning && full.edrs_early_stop));
}

TEST_CASE("bench runs agree across variants and threads") {
    const auto& ix = shared_index();
    WorkloadParams w;
    w.queries = 15;
    w.m_values = {2, 3};
    w.k_values = {1, 4};
    auto queries = generate_workload(ix, w);
    BenchOptions opt;
    opt.variants = {Variant::full, Variant::nosr, Variant::nosg, Variant::noed, Variant::oracle};
    opt.threads = 4;
    auto records = run_bench(ix, queries, opt);
    REQUIRE(records.size() == queries.size() * 5);
    for (std::size_t i = 0; i < records.size(); ++i) {
        CHECK(records[i].query_id == queries[i / 5].id);
        CHECK(records[i].variant == opt.variants[i % 5]);
        CHECK(records[i].scores.size() == records[i].distances.size());
        if (records[i].variant == Variant::noed) CHECK(records[i].counters.cpr_edrs == records[i].counters.cpr_sr);
    }
    CHECK(variant_mismatches(records).empty());

    opt.threads = 1;
    auto serial = run_bench(ix, queries, opt);
    for (std::size_t i = 0; i < records.size(); ++i) CHECK(serial[i].scores == records[i].scores);

    auto broken = records;
    broken[1].scores.front() += 1.0;
    CHECK(variant_mismatches(broken) == std::vector<std::size_t>{queries[0].id});

    SUBCASE("oracle over its limit is skipped") {
        BenchOptions tiny;
        tiny.variants = {Variant::full, Variant::oracle};
        tiny.oracle_limit = 1;
        auto r = run_bench(ix, {queries.front()}, tiny);
        REQUIRE(r.size() == 2);
        CHECK_FALSE(r[0].skipped);
        CHECK(r[1].skipped);
        CHECK(variant_mismatches(r).empty());
    }
}

TEST_CASE("CSV output") {
    const auto& ix = shared_index();
    WorkloadParams w;
    w.queries = 6;
    w.seed = 99;
    auto records = run_bench(ix, generate_workload(ix, w), BenchOptions{});
    std::ostringstream one, two;
    write_csv(one, records, false);
    write_csv(two, run_bench(ix, generate_workload(ix, w), BenchOptions{{Variant::full, Variant::nosr, Variant::nosg, Variant::noed}, 3}), false);
    CHECK(one.str() == two.str());

    const auto text = one.str();
    const auto header = text.substr(0, text.find('\n'));
    CHECK(header.rfind("query_id,variant,source,keywords,k,alpha,", 0) == 0);
    CHECK(header.find("wall_ms") == std::string::npos);
    std::size_t lines = std::count(text.begin(), text.end(), '\n');
    CHECK(lines == records.size() + 1);

    std::ostringstream timed;
    write_csv(timed, records, true);
    std::istringstream in(timed.str());
    auto back = read_csv(in);
    REQUIRE(back.size() == records.size());
    for (std::size_t i = 0; i < back.size(); ++i) {
        CHECK(back[i].query_id == records[i].query_id);
        CHECK(back[i].variant == records[i].variant);
        CHECK(back[i].keywords == records[i].keywords);
        CHECK(back[i].counters.cpr_edrs == records[i].counters.cpr_edrs);
        CHECK(back[i].counters.cps_rn == records[i].counters.cps_rn);
        REQUIRE(back[i].scores.size() == records[i].scores.size());
        for (std::size_t j = 0; j < back[i].scores.size(); ++j)
            CHECK(back[i].scores[j] == records[i].scores[j]);
        CHECK(back[i].wall_ms == doctest::Approx(records[i].wall_ms).epsilon(1e-6));
    }
    std::istringstream empty("");
    CHECK_THROWS_AS(read_csv(empty), Error);
    std::istringstream truncated("query_id,variant\n1,full\n");
    CHECK_THROWS_AS(read_csv(truncated), Error);
}

TEST_CASE("report") {
    CHECK_THROWS_AS(summarize({}), Error);

    BenchRecord r;
    r.query_id = 0;
    r.keywords = {1, 2};
    r.k = 3;
    r.alpha = 0.5;
    r.wall_ms = 4.0;
    r.counters.sg_rn = 10, r.counters.sg_sr = 5, r.counters.sg_bp = 2;
    r.counters.cps_rn = 100, r.counters.cps_sr = 20, r.counters.cps_bp = 5;
    r.counters.cpr_sr = 8, r.counters.cpr_edrs = 2;
    r.counters.visited = 40;
    r.counters.distance_computations = 6;
    auto rows = summarize({r});
    REQUIRE(rows.size() == 2);
    const auto& g = rows[0];
    CHECK(g.variant == "full");
    CHECK(g.m == 2);
    CHECK(g.k == 3);
    CHECK(g.records == 1);
    CHECK(g.p50_ms == 4.0);
    CHECK(g.p99_ms == 4.0);
    CHECK(g.sg_sr_ratio == 0.5);
    CHECK(g.sg_bp_ratio == 0.4);
    CHECK(g.cps_sr_ratio == 0.2);
    CHECK(g.cps_bp_ratio == 0.25);
    CHECK(g.cpr_skip_ratio == 0.75);
    CHECK(g.mean_legs == 6.0);
    CHECK(rows[1].m == 0);
    CHECK_FALSE(g.estimate.has_value());

    auto skipped = r;
    skipped.variant = Variant::oracle;
    skipped.skipped = true;
    auto with = summarize({r, skipped}, EstimatorInputs{});
    for (const auto& row : with) CHECK(row.variant == "full");
    REQUIRE(with[0].estimate.has_value());
    CHECK(*with[0].estimate == doctest::Approx(estimate_search_fraction(1.0, 2, 3, 10.0, 0.5, 10.0, 6.0)));

    std::ostringstream out;
    write_report(out, rows);
    CHECK(out.str().rfind("variant,m,k,alpha,records,", 0) == 0);

    SUBCASE("ratios of a real run lie in [0, 1]") {
        const auto& ix = shared_index();
        WorkloadParams w;
        w.queries = 10;
        w.m_values = {2, 3};
        auto recs = run_bench(ix, generate_workload(ix, w), BenchOptions{});
        for (const auto& row : summarize(recs, estimator_inputs(ix.net))) {
            for (double x : {row.sg_sr_ratio, row.sg_bp_ratio, row.cps_sr_ratio, row.cps_bp_ratio, row.cpr_skip_ratio}) {
                CHECK(x >= 0.0);
                CHECK(x <= 1.0);
            }
            CHECK(row.p50_ms <= row.p95_ms);
            CHECK(row.p95_ms <= row.p99_ms);
            if (row.m) CHECK(row.estimate.has_value());
        }
    }
}

TEST_CASE("estimator inputs from a network") {
    auto raw = raw_graph(3, {{0, 1, 3}, {1, 2, 5}}, {{0, 0, 2}, {1, 0, 4}, {2, 1, 4}}, {{0, 0}, {3, 0}, {3, 4}});
    auto net = normalize(raw, NormalizeOptions{false, true});
    auto in = estimator_inputs(net);
    CHECK(in.area == doctest::Approx(12.0).epsilon(1e-9));
    CHECK(in.pois_per_keyword == 1.5);
    CHECK(in.tau_high == 10.0);
    CHECK(in.tau_low == 5.0);
}
