#include "katr/route.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

namespace katr {

LegRouter::LegRouter(const KatrIndex& ix) : ix_(ix) {
    const auto n = ix.skeleton.node_count() + 2;
    g_.assign(n, kInfinity);
    pred_.assign(n, -1);
    stamp_.assign(n, 0);
    closed_.assign(n, 0);
}

namespace {

std::uint64_t leg_key(VertexId a, VertexId b) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) | static_cast<std::uint32_t>(b);
}

}  // namespace

double LegRouter::distance(VertexId a, VertexId b) {
    if (a == b) return 0.0;
    if (a > b) std::swap(a, b);
    const auto key = leg_key(a, b);
    if (auto it = cache_.find(key); it != cache_.end()) return it->second;
    const double d = search(a, b, false).distance;
    cache_.emplace(key, d);
    return d;
}

std::vector<VertexId> LegRouter::path(VertexId a, VertexId b) {
    if (a == b) return {a};
    const bool flip = a > b;
    if (flip) std::swap(a, b);
    auto found = search(a, b, true);
    cache_.emplace(leg_key(a, b), found.distance);
    if (flip) std::reverse(found.path.begin(), found.path.end());
    return found.path;
}

double LegRouter::route_distance(const std::vector<VertexId>& stops) {
    double total = 0.0;
    for (std::size_t i = 1; i < stops.size(); ++i) total += distance(stops[i - 1], stops[i]);
    return total;
}

std::vector<VertexId> LegRouter::route_path(const std::vector<VertexId>& stops) {
    std::vector<VertexId> out;
    if (stops.empty()) return out;
    out.push_back(stops.front());
    for (std::size_t i = 1; i < stops.size(); ++i) {
        auto leg = path(stops[i - 1], stops[i]);
        if (leg.empty()) return {};
        out.insert(out.end(), leg.begin() + 1, leg.end());
    }
    return out;
}

LegRouter::Found LegRouter::search(VertexId a, VertexId b, bool want_path) {
    ++searches_;
    const auto& pi = ix_.partition;
    const auto& sk = ix_.skeleton;
    const auto& net = ix_.net;
    const auto start_node = static_cast<std::int32_t>(sk.node_count());
    const auto target_node = start_node + 1;
    const SubgraphId sa = pi.assignment(a);
    const SubgraphId sb = pi.assignment(b);
    const double c = net.euclid_coefficient();
    const Vertex& tb = net.vertex(b);

    const double incumbent = sa == sb ? pi.intra_distance(a, b) : kInfinity;

    if (++generation_ == 0) {
        std::fill(stamp_.begin(), stamp_.end(), 0);
        generation_ = 1;
    }
    auto node_vertex = [&](std::int32_t x) {
        if (x == start_node) return a;
        if (x == target_node) return b;
        return sk.vertex(x);
    };
    auto touch = [&](std::int32_t x) {
        auto i = static_cast<std::size_t>(x);
        if (stamp_[i] != generation_) {
            stamp_[i] = generation_;
            g_[i] = kInfinity;
            pred_[i] = -1;
            closed_[i] = 0;
        }
    };
    auto heuristic = [&](std::int32_t x) {
        return x == target_node ? 0.0 : c * coordinate_distance(net.vertex(node_vertex(x)), tb);
    };

    const std::int32_t src = sk.node_of(a) >= 0 ? sk.node_of(a) : start_node;
    const std::int32_t dst = sk.node_of(b) >= 0 ? sk.node_of(b) : target_node;

    using Item = std::pair<double, std::int32_t>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    touch(src);
    g_[static_cast<std::size_t>(src)] = 0.0;
    heap.emplace(heuristic(src), src);

    auto relax = [&](std::int32_t from, std::int32_t to, double w) {
        touch(to);
        const auto ti = static_cast<std::size_t>(to);
        if (closed_[ti]) return;
        const double nd = g_[static_cast<std::size_t>(from)] + w;
        if (nd < g_[ti]) {
            g_[ti] = nd;
            pred_[ti] = from;
            heap.emplace(nd + heuristic(to), to);
        }
    };

    double best = incumbent;
    bool via_skeleton = false;
    while (!heap.empty()) {
        auto [f, x] = heap.top();
        heap.pop();
        const auto xi = static_cast<std::size_t>(x);
        if (closed_[xi]) continue;
        if (f >= best) break;
        closed_[xi] = 1;
        ++expanded_;
        if (hook_) hook_(node_vertex(x), g_[xi], heuristic(x), b);
        if (x == dst) {
            best = g_[xi];
            via_skeleton = true;
            break;
        }
        if (x == start_node) {
            for (auto border : pi.subgraph(sa).borders) {
                const double w = pi.intra_distance(a, border);
                if (std::isfinite(w)) relax(x, sk.node_of(border), w);
            }
            continue;
        }
        for (const auto& arc : sk.arcs(x)) relax(x, arc.to, arc.weight);
        const VertexId xv = sk.vertex(x);
        if (dst == target_node && pi.assignment(xv) == sb) {
            const double w = pi.intra_distance(xv, b);
            if (std::isfinite(w)) relax(x, target_node, w);
        }
    }

    Found out;
    out.distance = best;
    if (!want_path || !std::isfinite(best)) return out;
    if (!via_skeleton) {
        out.path = pi.intra_path(a, b);
        return out;
    }
    std::vector<std::int32_t> chain;
    for (std::int32_t x = dst; x >= 0; x = pred_[static_cast<std::size_t>(x)]) chain.push_back(x);
    std::reverse(chain.begin(), chain.end());
    out.path.push_back(a);
    for (std::size_t i = 1; i < chain.size(); ++i) {
        const VertexId u = node_vertex(chain[i - 1]);
        const VertexId w = node_vertex(chain[i]);
        if (pi.assignment(u) == pi.assignment(w)) {
            auto seg = pi.intra_path(u, w);
            out.path.insert(out.path.end(), seg.begin() + 1, seg.end());
        } else {
            out.path.push_back(w);
        }
    }
    return out;
}

}  // namespace katr
