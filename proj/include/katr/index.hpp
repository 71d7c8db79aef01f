#pragma once

#include <filesystem>
#include <optional>

#include "katr/graph.hpp"
#include "katr/partition.hpp"
#include "katr/poi_index.hpp"

namespace katr {

/// Everything a query needs, built once per network and shared read-only.
struct KatrIndex {
    RoadNetwork net;
    PartitionIndex partition;
    BorderSkeleton skeleton;
    PoiInvertedIndex pois;

    static KatrIndex build(RoadNetwork net, std::size_t partition_size = kDefaultPartitionSize,
                           unsigned threads = 0);
    /// Reuses (or refreshes) a cached partition file when given.
    static KatrIndex build(RoadNetwork net, std::size_t partition_size,
                           const std::optional<std::filesystem::path>& cache_file, bool* rebuilt = nullptr);
};

/// Partition cache file used inside a network directory.
inline constexpr const char* kPartitionFileName = "partition.katr";

/// Reads a network directory, normalizes it and builds the index, reusing
/// `<dir>/partition.katr` when it matches.
KatrIndex load_index_dir(const std::filesystem::path& dir, std::size_t partition_size = kDefaultPartitionSize,
                         bool* rebuilt = nullptr);

}  // namespace katr
