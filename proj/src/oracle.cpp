#include "katr/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace katr {

std::vector<double> floyd_warshall(const RoadNetwork& net) {
    const std::size_t n = net.vertex_count();
    std::vector<double> d(n * n, kInfinity);
    for (std::size_t i = 0; i < n; ++i) d[i * n + i] = 0.0;
    for (const auto& e : net.edges()) {
        auto u = static_cast<std::size_t>(e.u), v = static_cast<std::size_t>(e.v);
        d[u * n + v] = std::min(d[u * n + v], e.weight);
        d[v * n + u] = std::min(d[v * n + u], e.weight);
    }
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t i = 0; i < n; ++i) {
            const double dik = d[i * n + k];
            if (!std::isfinite(dik)) continue;
            for (std::size_t j = 0; j < n; ++j) {
                const double nd = dik + d[k * n + j];
                if (nd < d[i * n + j]) d[i * n + j] = nd;
            }
        }
    return d;
}

OracleResult oracle_topk(const RoadNetwork& net, const Query& q, const OracleOptions& options) {
    if (!net.valid_vertex(q.source))
        throw Error(ErrorCode::unknown_vertex, "unknown source vertex " + std::to_string(q.source), q.source);
    if (q.keywords.empty() || q.keywords.size() > kMaxKeywords)
        throw Error(ErrorCode::invalid_query, "keyword count out of range");
    if (q.k < 1) throw Error(ErrorCode::invalid_query, "k must be at least 1");
    if (q.destination && !net.valid_vertex(*q.destination))
        throw Error(ErrorCode::unknown_vertex, "unknown destination vertex", *q.destination);
    const std::size_t m = q.keywords.size();

    std::vector<std::vector<PoiId>> pools(m);
    double top_rating = 0.0;
    for (const auto& p : net.pois()) {
        top_rating = std::max(top_rating, p.rating);
        for (std::size_t i = 0; i < m; ++i)
            if (p.keyword == q.keywords[i]) pools[i].push_back(p.id);
    }
    for (std::size_t i = 0; i < m; ++i)
        if (pools[i].empty())
            throw Error(ErrorCode::uncoverable_keyword, "keyword " + std::to_string(q.keywords[i]) + " has no POI",
                        q.keywords[i]);
    const double common = q.common_rating.value_or(top_rating > 0.0 ? top_rating : 10.0);
    auto rating = [&](PoiId p) { return q.identical_ratings ? common : net.poi(p).rating; };

    const auto orders = visit_orders(m, q.fixed_order);
    OracleResult out;
    out.cp_sets = 1.0;
    for (const auto& pool : pools) out.cp_sets *= static_cast<double>(pool.size());
    out.permutations = out.cp_sets * static_cast<double>(orders.size());
    if (out.permutations > options.max_enumeration)
        throw Error(ErrorCode::enumeration_limit,
                    "oracle would enumerate " + std::to_string(out.permutations) + " routes (limit " +
                        std::to_string(options.max_enumeration) + ")");

    // Distances from every pivot vertex.
    std::vector<VertexId> pivots{q.source};
    if (q.destination) pivots.push_back(*q.destination);
    for (const auto& pool : pools)
        for (auto p : pool) pivots.push_back(net.poi(p).vertex);
    std::sort(pivots.begin(), pivots.end());
    pivots.erase(std::unique(pivots.begin(), pivots.end()), pivots.end());
    std::map<VertexId, ShortestPathTree> trees;
    std::vector<double> fw;
    if (options.distances == OracleDistances::floyd_warshall) {
        if (net.vertex_count() > 2000)
            throw Error(ErrorCode::invalid_input, "Floyd-Warshall oracle is limited to small graphs");
        fw = floyd_warshall(net);
    }
    if (options.distances == OracleDistances::dijkstra || options.expand_paths)
        for (auto v : pivots) trees.emplace(v, dijkstra(net, v));
    const std::size_t n = net.vertex_count();
    auto leg = [&](VertexId a, VertexId b) {
        if (!fw.empty()) return fw[static_cast<std::size_t>(a) * n + static_cast<std::size_t>(b)];
        return trees.at(a).dist[static_cast<std::size_t>(b)];
    };

    const double budget = q.distance_budget.value_or(kInfinity);
    std::vector<std::size_t> pos(m, 0);
    std::vector<PoiId> set(m);
    CpRoute candidate;
    while (true) {
        double tau = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            set[j] = pools[j][pos[j]];
            tau += rating(set[j]);
        }
        CpRoute best;
        for (const auto& order : orders) {
            candidate.pois.clear();
            candidate.pivots.assign(1, q.source);
            for (auto i : order) {
                candidate.pois.push_back(set[i]);
                candidate.pivots.push_back(net.poi(set[i]).vertex);
            }
            if (q.destination) candidate.pivots.push_back(*q.destination);
            double gd = 0.0;
            double ed = 0.0;
            for (std::size_t i = 1; i < candidate.pivots.size(); ++i) {
                gd += leg(candidate.pivots[i - 1], candidate.pivots[i]);
                ed += euclid_lower_bound(net, candidate.pivots[i - 1], candidate.pivots[i]);
            }
            candidate.graph_distance = gd;
            candidate.euclid_distance = ed;
            candidate.rating_sum = tau;
            candidate.score = score(q.alpha, gd, tau);
            if (!std::isfinite(best.graph_distance) || route_better(candidate, best)) best = candidate;
        }
        if (std::isfinite(best.graph_distance) && best.graph_distance <= budget) {
            if (out.routes.size() < q.k || route_better(best, out.routes.back())) {
                auto it = out.routes.begin();
                while (it != out.routes.end() && !route_better(best, *it)) ++it;
                out.routes.insert(it, best);
                if (out.routes.size() > q.k) out.routes.pop_back();
            }
        }
        std::size_t j = 0;
        while (j < m && ++pos[j] == pools[j].size()) pos[j++] = 0;
        if (j == m) break;
    }

    if (options.expand_paths) {
        for (auto& r : out.routes) {
            r.path.assign(1, q.source);
            for (std::size_t i = 1; i < r.pivots.size(); ++i) {
                auto seg = trees.at(r.pivots[i - 1]).path_to(r.pivots[i]);
                r.path.insert(r.path.end(), seg.begin() + 1, seg.end());
            }
        }
    }
    out.partial = out.routes.size() < q.k;
    out.infeasible_budget = q.distance_budget.has_value() && out.routes.empty();
    return out;
}

}  // namespace katr
