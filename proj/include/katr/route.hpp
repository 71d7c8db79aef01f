#pragma once

#include <functional>
#include <unordered_map>
#include <vector>

#include "katr/index.hpp"

namespace katr {

/// Exact pivot-to-pivot distances. Each leg is an A* search over the two
/// pivots plus the border skeleton, guided by the calibrated Euclidean
/// bound; legs inside one subgraph start from the intra table entry.
/// Results are cached per router, so one router per query.
class LegRouter {
public:
    explicit LegRouter(const KatrIndex& ix);

    double distance(VertexId a, VertexId b);
    /// Full vertex sequence a..b of a shortest leg.
    std::vector<VertexId> path(VertexId a, VertexId b);

    /// Distance of visiting stops in order, starting at stops[0].
    double route_distance(const std::vector<VertexId>& stops);
    std::vector<VertexId> route_path(const std::vector<VertexId>& stops);

    /// Number of legs actually searched (cache misses).
    std::size_t searches() const { return searches_; }
    std::size_t expanded_nodes() const { return expanded_; }

    /// Called for every node expanded by A*: (vertex, g, heuristic, target).
    using ExpansionHook = std::function<void(VertexId, double, double, VertexId)>;
    void set_expansion_hook(ExpansionHook hook) { hook_ = std::move(hook); }

private:
    struct Found {
        double distance = kInfinity;
        std::vector<VertexId> path;
    };
    Found search(VertexId a, VertexId b, bool want_path);

    const KatrIndex& ix_;
    std::unordered_map<std::uint64_t, double> cache_;
    // Scratch indexed by skeleton node; stamp_ marks entries valid for the
    // current search.
    std::vector<double> g_;
    std::vector<std::int32_t> pred_;
    std::vector<std::uint32_t> stamp_;
    std::vector<char> closed_;
    std::uint32_t generation_ = 0;
    std::size_t searches_ = 0;
    std::size_t expanded_ = 0;
    ExpansionHook hook_;
};

}  // namespace katr
