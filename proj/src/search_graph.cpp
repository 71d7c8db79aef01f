#include "katr/search_graph.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

namespace katr {

SearchGraph build_search_graph(const RoadNetwork& net, const PartitionIndex& pi, const PoiInvertedIndex& idx,
                               VertexId source, std::span<const KeywordId> keywords) {
    if (!net.valid_vertex(source))
        throw Error(ErrorCode::unknown_vertex, "unknown query vertex " + std::to_string(source), source);
    SearchGraph g;
    g.source_ = source;
    g.relevant_.assign(pi.subgraph_count(), 0);
    g.km_pois_.resize(keywords.size());
    for (std::size_t i = 0; i < keywords.size(); ++i) {
        const auto k = keywords[i];
        auto posting = idx.postings(k);
        if (posting.empty())
            throw Error(ErrorCode::uncoverable_keyword, "keyword " + std::to_string(k) + " has no POI", k);
        g.km_pois_[i].assign(posting.begin(), posting.end());
        for (auto sg : idx.subgraphs_with(k)) g.relevant_[static_cast<std::size_t>(sg)] = 1;
    }
    g.relevant_count_ = static_cast<std::size_t>(std::count(g.relevant_.begin(), g.relevant_.end(), 1));

    const std::size_t n = net.vertex_count();
    g.local_.assign(n, -1);
    for (VertexId v = 0; v < static_cast<VertexId>(n); ++v) {
        if (g.relevant(pi.assignment(v)) || pi.is_border(v) || v == source) {
            g.local_[static_cast<std::size_t>(v)] = static_cast<std::int32_t>(g.nodes_.size());
            g.nodes_.push_back(v);
        }
    }

    const SubgraphId source_sg = pi.assignment(source);
    const bool source_collapsed = !g.relevant(source_sg) && !pi.is_border(source);
    g.offsets_.assign(g.nodes_.size() + 1, 0);
    std::vector<SearchArc> scratch;
    for (std::size_t i = 0; i < g.nodes_.size(); ++i) {
        const VertexId v = g.nodes_[i];
        const SubgraphId sv = pi.assignment(v);
        scratch.clear();
        if (g.relevant(sv)) {
            for (const auto& a : net.neighbors(v)) scratch.push_back(SearchArc{g.node_of(a.to), a.weight, ArcKind::road});
        } else {
            for (const auto& a : net.neighbors(v))
                if (pi.assignment(a.to) != sv) scratch.push_back(SearchArc{g.node_of(a.to), a.weight, ArcKind::road});
            const auto& sg = pi.subgraph(sv);
            auto link = [&](VertexId w) {
                if (w == v) return;
                const double d = pi.intra_distance(v, w);
                if (std::isfinite(d)) scratch.push_back(SearchArc{g.node_of(w), d, ArcKind::shortcut});
            };
            for (auto b : sg.borders) link(b);
            if (source_collapsed && sv == source_sg && v != source) link(source);
        }
        std::sort(scratch.begin(), scratch.end(), [](const SearchArc& a, const SearchArc& b) {
            return a.to != b.to ? a.to < b.to : a.weight < b.weight;
        });
        for (const auto& a : scratch)
            if (a.kind == ArcKind::shortcut) ++g.shortcut_count_;
        g.arcs_.insert(g.arcs_.end(), scratch.begin(), scratch.end());
        g.offsets_[i + 1] = g.arcs_.size();
    }
    return g;
}

std::vector<double> SearchGraph::distances_from(VertexId source) const {
    const auto s = node_of(source);
    if (s < 0) throw Error(ErrorCode::unknown_vertex, "vertex not in search graph", source);
    std::vector<double> dist(nodes_.size(), kInfinity);
    using Item = std::pair<double, std::int32_t>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    dist[static_cast<std::size_t>(s)] = 0.0;
    heap.emplace(0.0, s);
    while (!heap.empty()) {
        auto [d, u] = heap.top();
        heap.pop();
        if (d > dist[static_cast<std::size_t>(u)]) continue;
        for (const auto& a : arcs(u)) {
            const double nd = d + a.weight;
            if (nd < dist[static_cast<std::size_t>(a.to)]) {
                dist[static_cast<std::size_t>(a.to)] = nd;
                heap.emplace(nd, a.to);
            }
        }
    }
    return dist;
}

}  // namespace katr
