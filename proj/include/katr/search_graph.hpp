#pragma once

#include <span>
#include <vector>

#include "katr/graph.hpp"
#include "katr/partition.hpp"
#include "katr/poi_index.hpp"

namespace katr {

enum class ArcKind : std::uint8_t { road, shortcut };

struct SearchArc {
    std::int32_t to = 0;  // local node id
    double weight = 0.0;
    ArcKind kind = ArcKind::road;
};

/// Query overlay: relevant subgraphs whole, irrelevant ones reduced to
/// their borders joined by intra shortcuts, and the query vertex.
class SearchGraph {
public:
    std::size_t node_count() const { return nodes_.size(); }
    VertexId vertex(std::int32_t node) const { return nodes_[static_cast<std::size_t>(node)]; }
    /// Local node of v, -1 if v is not part of the overlay.
    std::int32_t node_of(VertexId v) const { return local_[static_cast<std::size_t>(v)]; }
    bool contains(VertexId v) const { return node_of(v) >= 0; }
    std::span<const SearchArc> arcs(std::int32_t node) const {
        auto b = offsets_[static_cast<std::size_t>(node)];
        auto e = offsets_[static_cast<std::size_t>(node) + 1];
        return {arcs_.data() + b, e - b};
    }
    std::size_t arc_count() const { return arcs_.size(); }

    VertexId query_vertex() const { return source_; }
    bool relevant(SubgraphId sg) const { return relevant_[static_cast<std::size_t>(sg)] != 0; }
    const std::vector<char>& relevant_mask() const { return relevant_; }
    std::size_t relevant_count() const { return relevant_count_; }
    /// km-POIs of the i-th query keyword.
    std::span<const PoiId> km_pois(std::size_t keyword_slot) const { return km_pois_[keyword_slot]; }
    std::size_t shortcut_count() const { return shortcut_count_; }

    /// All shortest-path distances from source over the overlay, indexed by
    /// local node.
    std::vector<double> distances_from(VertexId source) const;

    friend SearchGraph build_search_graph(const RoadNetwork& net, const PartitionIndex& pi,
                                          const PoiInvertedIndex& idx, VertexId source,
                                          std::span<const KeywordId> keywords);

private:
    VertexId source_ = kNoVertex;
    std::vector<VertexId> nodes_;
    std::vector<std::int32_t> local_;
    std::vector<std::size_t> offsets_;
    std::vector<SearchArc> arcs_;
    std::vector<char> relevant_;
    std::size_t relevant_count_ = 0;
    std::size_t shortcut_count_ = 0;
    std::vector<std::vector<PoiId>> km_pois_;
};

/// Throws uncoverable_keyword (subject = keyword id) for a keyword without
/// POIs.
SearchGraph build_search_graph(const RoadNetwork& net, const PartitionIndex& pi, const PoiInvertedIndex& idx,
                               VertexId source, std::span<const KeywordId> keywords);

}  // namespace katr
