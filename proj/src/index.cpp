#include "katr/index.hpp"

namespace katr {

KatrIndex KatrIndex::build(RoadNetwork net, std::size_t partition_size, unsigned threads) {
    KatrIndex ix;
    ix.partition = build_partition_index(net, partition_size, threads);
    ix.skeleton = BorderSkeleton(net, ix.partition);
    ix.pois = PoiInvertedIndex(net, ix.partition);
    ix.net = std::move(net);
    return ix;
}

KatrIndex KatrIndex::build(RoadNetwork net, std::size_t partition_size,
                           const std::optional<std::filesystem::path>& cache_file, bool* rebuilt) {
    if (!cache_file) {
        if (rebuilt) *rebuilt = true;
        return build(std::move(net), partition_size, 0u);
    }
    KatrIndex ix;
    ix.partition = load_or_build_partition(net, *cache_file, partition_size, rebuilt);
    ix.skeleton = BorderSkeleton(net, ix.partition);
    ix.pois = PoiInvertedIndex(net, ix.partition);
    ix.net = std::move(net);
    return ix;
}

KatrIndex load_index_dir(const std::filesystem::path& dir, std::size_t partition_size, bool* rebuilt) {
    auto net = normalize(read_raw_network_dir(dir));
    return KatrIndex::build(std::move(net), partition_size, dir / kPartitionFileName, rebuilt);
}

}  // namespace katr
