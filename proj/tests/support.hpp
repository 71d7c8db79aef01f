#pragma once

// Shared fixtures and independent reference algorithms for the tests.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <tuple>
#include <vector>

#include "katr/engine.hpp"
#include "katr/oracle.hpp"
#include "katr/synthetic.hpp"

namespace katr::test {

struct EdgeSpec {
    std::int64_t u, v;
    double w;
};

struct PoiSpec {
    std::int64_t v;
    KeywordId k;
    double r;
};

/// Vertices 0..n-1 at the given coordinates (default: on the x axis).
inline RawNetwork raw_graph(std::size_t n, const std::vector<EdgeSpec>& edges, const std::vector<PoiSpec>& pois = {},
                            const std::vector<std::pair<double, double>>& coords = {}) {
    RawNetwork raw;
    for (std::size_t i = 0; i < n; ++i) {
        const auto xy = i < coords.size() ? coords[i] : std::pair<double, double>{static_cast<double>(i), 0.0};
        raw.vertices.push_back(RawVertex{static_cast<std::int64_t>(i), xy.first, xy.second});
    }
    for (const auto& e : edges) raw.edges.push_back(RawEdge{e.u, e.v, e.w});
    for (const auto& p : pois) raw.pois.push_back(RawPoi{p.v, p.k, p.r});
    return raw;
}

/// Normalized without rescaling, so weights and ratings stay as given.
inline RoadNetwork as_is(const RawNetwork& raw) { return normalize(raw, NormalizeOptions{false, false}); }

inline std::vector<EdgeSpec> path_edges(std::size_t n, double w = 1.0) {
    std::vector<EdgeSpec> out;
    for (std::size_t i = 1; i < n; ++i) out.push_back({static_cast<std::int64_t>(i - 1), static_cast<std::int64_t>(i), w});
    return out;
}

/// Bellman-Ford over the undirected edge list.
inline std::vector<double> bellman_ford(const RoadNetwork& net, VertexId s) {
    std::vector<double> d(net.vertex_count(), kInfinity);
    d[static_cast<std::size_t>(s)] = 0.0;
    for (std::size_t round = 0; round + 1 < net.vertex_count(); ++round) {
        bool changed = false;
        for (const auto& e : net.edges()) {
            auto& du = d[static_cast<std::size_t>(e.u)];
            auto& dv = d[static_cast<std::size_t>(e.v)];
            if (du + e.weight < dv) dv = du + e.weight, changed = true;
            if (dv + e.weight < du) du = dv + e.weight, changed = true;
        }
        if (!changed) break;
    }
    return d;
}

/// Small random geometric network with integral weights, so sums of
/// distances are exact in floating point.
inline RoadNetwork small_network(std::uint64_t seed, std::size_t vertices, std::size_t keywords,
                                 std::size_t pois_per_keyword, bool integer_weights = true,
                                 RatingDistribution ratings = RatingDistribution::stars) {
    SyntheticParams p;
    p.seed = seed;
    p.vertices = vertices;
    p.avg_degree = 6;
    p.keywords = keywords;
    p.pois_per_keyword = pois_per_keyword;
    p.ratings = ratings;
    p.integer_weight_scale = integer_weights ? 1000.0 : 0.0;
    return normalize(generate_synthetic(p), NormalizeOptions{!integer_weights, true});
}

/// Keywords that have POIs in the index, in id order.
inline std::vector<KeywordId> keywords_with_pois(const KatrIndex& ix) {
    std::vector<KeywordId> out;
    for (const auto& info : ix.pois.catalog()) out.push_back(info.keyword_id);
    return out;
}

inline Query random_query(const KatrIndex& ix, std::mt19937_64& rng, std::size_t m, std::size_t k, double alpha) {
    auto kws = keywords_with_pois(ix);
    if (kws.size() < m) throw std::invalid_argument("fixture has too few keywords with POIs");
    std::shuffle(kws.begin(), kws.end(), rng);
    Query q;
    q.source = static_cast<VertexId>(std::uniform_int_distribution<std::size_t>(0, ix.net.vertex_count() - 1)(rng));
    q.keywords.assign(kws.begin(), kws.begin() + static_cast<std::ptrdiff_t>(m));
    q.k = k;
    q.alpha = alpha;
    return q;
}

inline bool same_scores(const std::vector<CpRoute>& a, const std::vector<CpRoute>& b, double tol = 1e-9) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (std::abs(a[i].score - b[i].score) > tol) return false;
    return true;
}

inline std::vector<PoiId> sorted_pois(std::vector<PoiId> pois) {
    std::sort(pois.begin(), pois.end());
    return pois;
}

/// Exhaustive best visit order of one CP-Set with full Dijkstra legs.
inline double exhaustive_route_distance(const RoadNetwork& net, VertexId source, std::optional<VertexId> destination,
                                        std::vector<PoiId> pois) {
    std::sort(pois.begin(), pois.end());
    double best = kInfinity;
    do {
        VertexId at = source;
        double d = 0.0;
        for (auto p : pois) {
            d += shortest_distance(net, at, net.poi(p).vertex);
            at = net.poi(p).vertex;
        }
        if (destination) d += shortest_distance(net, at, *destination);
        best = std::min(best, d);
    } while (std::next_permutation(pois.begin(), pois.end()));
    return best;
}

}  // namespace katr::test
