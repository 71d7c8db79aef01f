#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "katr/error.hpp"

namespace katr {

using VertexId = std::int32_t;
using KeywordId = std::int32_t;
using PoiId = std::int32_t;
using SubgraphId = std::int32_t;

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();
inline constexpr VertexId kNoVertex = -1;

// Relative slack applied to the Euclidean calibration coefficient so that
// rounding in summed legs never lifts a lower bound above a graph distance.
inline constexpr double kCalibrationSlack = 1e-12;

struct Vertex {
    VertexId id = 0;
    double lon = 0.0;
    double lat = 0.0;
};

struct Edge {
    VertexId u = 0;
    VertexId v = 0;
    double weight = 0.0;
};

/// A single-keyword rating record positioned on a vertex. Locations with
/// several keywords are several co-located records.
struct Poi {
    PoiId id = 0;
    VertexId vertex = 0;
    KeywordId keyword = 0;
    double rating = 0.0;
};

struct Arc {
    VertexId to = 0;
    double weight = 0.0;
};

// Input as read from the text files, before validation and normalization.
struct RawVertex {
    std::int64_t id = 0;
    double lon = 0.0;
    double lat = 0.0;
};

struct RawEdge {
    std::int64_t u = 0;
    std::int64_t v = 0;
    double weight = 0.0;
};

struct RawPoi {
    std::int64_t vertex = 0;
    KeywordId keyword = 0;
    double rating = 0.0;
};

struct RawNetwork {
    std::vector<RawVertex> vertices;
    std::vector<RawEdge> edges;
    std::vector<RawPoi> pois;
    std::map<KeywordId, std::string> tags;
};

struct NormalizeOptions {
    bool rescale_weights = true;
    bool rescale_ratings = true;
};

struct IngestReport {
    std::size_t raw_vertices = 0;
    std::size_t raw_edges = 0;
    std::size_t raw_pois = 0;
    std::size_t components = 0;
    std::size_t dropped_vertices = 0;
    std::size_t dropped_edges = 0;
    std::size_t dropped_pois = 0;
    std::size_t duplicate_edges = 0;
};

/// Immutable, normalized road network with CSR adjacency.
class RoadNetwork {
public:
    RoadNetwork() = default;

    std::size_t vertex_count() const { return vertices_.size(); }
    std::size_t edge_count() const { return edges_.size(); }
    std::size_t poi_count() const { return pois_.size(); }

    const std::vector<Vertex>& vertices() const { return vertices_; }
    const std::vector<Edge>& edges() const { return edges_; }
    const std::vector<Poi>& pois() const { return pois_; }
    const Vertex& vertex(VertexId v) const { return vertices_[static_cast<std::size_t>(v)]; }
    const Poi& poi(PoiId p) const { return pois_[static_cast<std::size_t>(p)]; }

    std::span<const Arc> neighbors(VertexId v) const {
        auto b = offsets_[static_cast<std::size_t>(v)];
        auto e = offsets_[static_cast<std::size_t>(v) + 1];
        return {arcs_.data() + b, e - b};
    }

    /// POI records sitting on v, in id order.
    std::span<const PoiId> pois_at(VertexId v) const {
        auto b = poi_offsets_[static_cast<std::size_t>(v)];
        auto e = poi_offsets_[static_cast<std::size_t>(v) + 1];
        return {poi_by_vertex_.data() + b, e - b};
    }

    bool valid_vertex(VertexId v) const { return v >= 0 && static_cast<std::size_t>(v) < vertices_.size(); }

    /// Multiply a normalized distance by this to get input units.
    double weight_scale() const { return weight_scale_; }
    /// Multiply a normalized rating by this to get input units.
    double rating_scale() const { return rating_scale_; }
    /// c such that c * |xy(s) - xy(t)| <= shortest_distance(s, t) for every pair.
    double euclid_coefficient() const { return euclid_coefficient_; }

    std::int64_t original_id(VertexId v) const { return original_ids_[static_cast<std::size_t>(v)]; }
    std::optional<VertexId> internal_id(std::int64_t original) const;

    const std::map<KeywordId, std::string>& tags() const { return tags_; }
    std::string tag(KeywordId k) const;

    const IngestReport& ingest_report() const { return report_; }

    /// Order-sensitive 64-bit content hash of the normalized network.
    std::uint64_t fingerprint() const;

    friend RoadNetwork normalize(const RawNetwork& raw, const NormalizeOptions& options);

private:
    void build_adjacency();

    std::vector<Vertex> vertices_;
    std::vector<Edge> edges_;
    std::vector<Poi> pois_;
    std::vector<std::size_t> offsets_;
    std::vector<Arc> arcs_;
    std::vector<std::size_t> poi_offsets_;
    std::vector<PoiId> poi_by_vertex_;
    std::vector<std::int64_t> original_ids_;
    std::unordered_map<std::int64_t, VertexId> by_original_;
    std::map<KeywordId, std::string> tags_;
    double weight_scale_ = 1.0;
    double rating_scale_ = 1.0;
    double euclid_coefficient_ = 1.0;
    IngestReport report_;
};

/// Validates raw input, keeps the largest connected component, relabels
/// vertices densely (in input order) and rescales weights into (0,1] and
/// ratings into [0,10].
RoadNetwork normalize(const RawNetwork& raw, const NormalizeOptions& options = {});

// Text formats: `id lon lat`, `u v weight`, `vertex keyword rating`,
// `keyword tag`. '#' starts a comment.
RawNetwork read_raw_network(const std::filesystem::path& vertices_file, const std::filesystem::path& edges_file,
                            const std::filesystem::path& pois_file,
                            const std::optional<std::filesystem::path>& tags_file = std::nullopt);
/// Reads vertices.txt / edges.txt / pois.txt / tags.txt (optional) from dir.
RawNetwork read_raw_network_dir(const std::filesystem::path& dir);
void write_raw_network_dir(const RawNetwork& raw, const std::filesystem::path& dir);

double coordinate_distance(const Vertex& a, const Vertex& b);

struct ShortestPathTree {
    VertexId source = kNoVertex;
    std::vector<double> dist;
    std::vector<VertexId> pred;

    /// Vertex sequence source..target; empty if unreachable.
    std::vector<VertexId> path_to(VertexId target) const;
};

/// Full single-source Dijkstra. Equal-distance predecessors resolve to the
/// smaller vertex id.
ShortestPathTree dijkstra(const RoadNetwork& net, VertexId source);

/// Exact shortest distance; kInfinity when t is unreachable from s.
double shortest_distance(const RoadNetwork& net, VertexId s, VertexId t);

double euclid_lower_bound(const RoadNetwork& net, VertexId s, VertexId t);

}  // namespace katr
