#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <vector>

#include "katr/graph.hpp"

namespace katr {

inline constexpr std::size_t kDefaultPartitionSize = 64;

struct Subgraph {
    SubgraphId id = 0;
    std::vector<VertexId> members;  // ascending
    std::vector<VertexId> borders;  // ascending, subset of members

    // Intra-subgraph shortest distances (paths restricted to member
    // vertices), lower-triangular over local indices.
    std::vector<double> dist;
    // pred[s * n + t]: local index of t's predecessor on the intra path
    // from s, -1 for s itself or unreachable t.
    std::vector<std::int32_t> pred;

    std::size_t size() const { return members.size(); }
    double local_distance(std::size_t a, std::size_t b) const {
        if (a < b) std::swap(a, b);
        return dist[a * (a + 1) / 2 + b];
    }
};

struct ExternalEdge {
    VertexId u = 0;  // u < v
    VertexId v = 0;
    double weight = 0.0;
};

struct Shortcut {
    VertexId from = 0;
    VertexId to = 0;
    double distance = 0.0;
};

class PartitionIndex {
public:
    std::size_t subgraph_count() const { return subgraphs_.size(); }
    const std::vector<Subgraph>& subgraphs() const { return subgraphs_; }
    const Subgraph& subgraph(SubgraphId id) const;
    SubgraphId assignment(VertexId v) const { return assignment_[static_cast<std::size_t>(v)]; }
    const std::vector<SubgraphId>& assignment() const { return assignment_; }
    std::int32_t local_index(VertexId v) const { return local_index_[static_cast<std::size_t>(v)]; }
    bool is_border(VertexId v) const { return is_border_[static_cast<std::size_t>(v)] != 0; }
    const std::vector<ExternalEdge>& external_edges() const { return external_edges_; }
    std::size_t max_subgraph_size() const { return max_size_; }
    bool has_intra_tables() const { return has_tables_; }

    /// Intra-subgraph distance between two members of the same subgraph.
    double intra_distance(VertexId a, VertexId b) const;
    /// Intra-subgraph vertex sequence a..b; empty if unreachable inside.
    std::vector<VertexId> intra_path(VertexId a, VertexId b) const;

    /// Border pairs (both directions) with finite intra distance.
    std::vector<Shortcut> border_shortcuts(SubgraphId sg) const;

    std::uint64_t network_fingerprint() const { return fingerprint_; }

    /// Assemble from a vertex → subgraph assignment. Subgraph ids must be
    /// dense 0..n-1 and every id used.
    static PartitionIndex from_assignment(const RoadNetwork& net, std::vector<SubgraphId> assignment,
                                          std::size_t max_size);

    friend void build_intra_distances(PartitionIndex& pi, const RoadNetwork& net, unsigned threads);
    friend void save_partition(const PartitionIndex& pi, const std::filesystem::path& file);
    friend PartitionIndex load_partition(const std::filesystem::path& file);

private:
    std::vector<SubgraphId> assignment_;
    std::vector<std::int32_t> local_index_;
    std::vector<char> is_border_;
    std::vector<Subgraph> subgraphs_;
    std::vector<ExternalEdge> external_edges_;
    std::size_t max_size_ = 0;
    std::uint64_t fingerprint_ = 0;
    bool has_tables_ = false;
};

class Partitioner {
public:
    virtual ~Partitioner() = default;
    /// Returns a dense vertex → subgraph assignment; every part connected
    /// and of size <= max_size.
    virtual std::vector<SubgraphId> assign(const RoadNetwork& net, std::size_t max_size) const = 0;
};

/// Grows BFS regions up to max_size, seeding each new region next to the
/// previous ones, then folds small fragments into neighbouring regions.
class BfsGrowPartitioner : public Partitioner {
public:
    explicit BfsGrowPartitioner(std::uint64_t seed = 1) : seed_(seed) {}
    std::vector<SubgraphId> assign(const RoadNetwork& net, std::size_t max_size) const override;

private:
    std::uint64_t seed_;
};

PartitionIndex partition(const RoadNetwork& net, std::size_t max_size, const Partitioner& partitioner);
PartitionIndex partition(const RoadNetwork& net, std::size_t max_size = kDefaultPartitionSize);

/// Fills per-subgraph distance and predecessor tables. threads = 0 picks
/// hardware concurrency.
void build_intra_distances(PartitionIndex& pi, const RoadNetwork& net, unsigned threads = 0);

/// Partition + intra tables in one step.
PartitionIndex build_partition_index(const RoadNetwork& net, std::size_t max_size = kDefaultPartitionSize,
                                     unsigned threads = 0);

void save_partition(const PartitionIndex& pi, const std::filesystem::path& file);
PartitionIndex load_partition(const std::filesystem::path& file);

/// Loads file if it matches net's fingerprint and max_size, otherwise
/// rebuilds and rewrites it.
PartitionIndex load_or_build_partition(const RoadNetwork& net, const std::filesystem::path& file,
                                       std::size_t max_size, bool* rebuilt = nullptr);

/// Overlay over all border vertices: external edges plus intra-subgraph
/// border shortcuts. Distances between borders on it are exact.
class BorderSkeleton {
public:
    struct SkelArc {
        std::int32_t to = 0;  // skeleton node index
        double weight = 0.0;
        bool shortcut = false;
    };

    BorderSkeleton() = default;
    BorderSkeleton(const RoadNetwork& net, const PartitionIndex& pi);

    std::size_t node_count() const { return nodes_.size(); }
    VertexId vertex(std::int32_t node) const { return nodes_[static_cast<std::size_t>(node)]; }
    /// Skeleton node for a border vertex, -1 otherwise.
    std::int32_t node_of(VertexId v) const { return node_of_[static_cast<std::size_t>(v)]; }
    std::span<const SkelArc> arcs(std::int32_t node) const {
        auto b = offsets_[static_cast<std::size_t>(node)];
        auto e = offsets_[static_cast<std::size_t>(node) + 1];
        return {arcs_.data() + b, e - b};
    }

private:
    std::vector<VertexId> nodes_;
    std::vector<std::int32_t> node_of_;
    std::vector<std::size_t> offsets_;
    std::vector<SkelArc> arcs_;
};

}  // namespace katr
