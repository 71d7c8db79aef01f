#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "katr/graph.hpp"
#include "katr/partition.hpp"

namespace katr {

struct KeywordInfo {
    KeywordId keyword_id = 0;
    std::string tag;
    std::size_t count = 0;
};

/// Keyword → POIs, globally and per subgraph, each list ordered by
/// (rating desc, vertex asc, id asc).
class PoiInvertedIndex {
public:
    PoiInvertedIndex() = default;
    PoiInvertedIndex(const RoadNetwork& net, const PartitionIndex& pi);

    /// Empty span for keywords without POIs.
    std::span<const PoiId> postings(KeywordId k) const;
    std::span<const PoiId> postings(KeywordId k, SubgraphId sg) const;
    /// Subgraphs holding at least one POI of k, ascending.
    std::span<const SubgraphId> subgraphs_with(KeywordId k) const;

    const std::vector<KeywordInfo>& catalog() const { return catalog_; }
    std::optional<KeywordId> find_tag(const std::string& tag) const;
    bool has_keyword(KeywordId k) const { return slot(k) >= 0; }
    const Poi& poi(PoiId p) const { return pois_[static_cast<std::size_t>(p)]; }
    SubgraphId subgraph_of(PoiId p) const { return poi_subgraph_[static_cast<std::size_t>(p)]; }

private:
    std::int32_t slot(KeywordId k) const;

    struct KeywordLists {
        std::vector<PoiId> all;
        std::vector<SubgraphId> subgraphs;
        std::vector<std::size_t> offsets;  // into by_subgraph, parallel to subgraphs
        std::vector<PoiId> by_subgraph;
    };

    std::vector<Poi> pois_;
    std::vector<SubgraphId> poi_subgraph_;
    std::vector<KeywordId> keywords_;  // ascending, parallel to lists_
    std::vector<KeywordLists> lists_;
    std::vector<KeywordInfo> catalog_;
};

PoiInvertedIndex build_poi_index(const RoadNetwork& net, const PartitionIndex& pi);

/// POI filter: true means the POI may be used.
using PoiFilter = std::function<bool(const Poi&)>;

/// Σ over keywords of the best admissible rating. `restrict` limits the
/// subgraphs considered (null: all). nullopt when some keyword has no
/// admissible POI.
std::optional<double> max_cumulative_rating(const PoiInvertedIndex& idx, std::span<const KeywordId> keywords,
                                            const std::vector<char>* restrict = nullptr,
                                            const PoiFilter& admissible = {});

/// Best cumulative rating over CP-Sets holding at least one of the forced
/// candidates; other keywords draw from `restrict`/`admissible`. Candidates
/// whose keyword is not queried are ignored; nullopt when none remain.
std::optional<double> max_cumulative_rating_with_forced_poi(const PoiInvertedIndex& idx,
                                                            std::span<const KeywordId> keywords,
                                                            std::span<const PoiId> forced_candidates,
                                                            const std::vector<char>* restrict = nullptr,
                                                            const PoiFilter& admissible = {});

}  // namespace katr
