#include "katr/poi_index.hpp"

#include <algorithm>
#include <cmath>

namespace katr {

PoiInvertedIndex::PoiInvertedIndex(const RoadNetwork& net, const PartitionIndex& pi) {
    pois_ = net.pois();
    poi_subgraph_.reserve(pois_.size());
    for (const auto& p : pois_) {
        keywords_.push_back(p.keyword);
        poi_subgraph_.push_back(pi.assignment(p.vertex));
    }
    std::sort(keywords_.begin(), keywords_.end());
    keywords_.erase(std::unique(keywords_.begin(), keywords_.end()), keywords_.end());
    lists_.resize(keywords_.size());
    for (const auto& p : pois_) lists_[static_cast<std::size_t>(slot(p.keyword))].all.push_back(p.id);

    auto order = [this](PoiId a, PoiId b) {
        const auto& pa = pois_[static_cast<std::size_t>(a)];
        const auto& pb = pois_[static_cast<std::size_t>(b)];
        if (pa.rating != pb.rating) return pa.rating > pb.rating;
        if (pa.vertex != pb.vertex) return pa.vertex < pb.vertex;
        return a < b;
    };
    for (std::size_t i = 0; i < keywords_.size(); ++i) {
        auto& l = lists_[i];
        std::sort(l.all.begin(), l.all.end(), order);
        // Stable partition by subgraph keeps the rating order inside each.
        l.by_subgraph = l.all;
        std::stable_sort(l.by_subgraph.begin(), l.by_subgraph.end(),
                         [this](PoiId a, PoiId b) { return subgraph_of(a) < subgraph_of(b); });
        for (std::size_t j = 0; j < l.by_subgraph.size(); ++j) {
            const auto sg = subgraph_of(l.by_subgraph[j]);
            if (l.subgraphs.empty() || l.subgraphs.back() != sg) {
                l.subgraphs.push_back(sg);
                l.offsets.push_back(j);
            }
        }
        l.offsets.push_back(l.by_subgraph.size());
        catalog_.push_back(KeywordInfo{keywords_[i], net.tag(keywords_[i]), l.all.size()});
    }
}

std::int32_t PoiInvertedIndex::slot(KeywordId k) const {
    auto it = std::lower_bound(keywords_.begin(), keywords_.end(), k);
    if (it == keywords_.end() || *it != k) return -1;
    return static_cast<std::int32_t>(it - keywords_.begin());
}

std::span<const PoiId> PoiInvertedIndex::postings(KeywordId k) const {
    const auto s = slot(k);
    if (s < 0) return {};
    return lists_[static_cast<std::size_t>(s)].all;
}

std::span<const PoiId> PoiInvertedIndex::postings(KeywordId k, SubgraphId sg) const {
    const auto s = slot(k);
    if (s < 0) return {};
    const auto& l = lists_[static_cast<std::size_t>(s)];
    auto it = std::lower_bound(l.subgraphs.begin(), l.subgraphs.end(), sg);
    if (it == l.subgraphs.end() || *it != sg) return {};
    const auto i = static_cast<std::size_t>(it - l.subgraphs.begin());
    return std::span<const PoiId>(l.by_subgraph).subspan(l.offsets[i], l.offsets[i + 1] - l.offsets[i]);
}

std::span<const SubgraphId> PoiInvertedIndex::subgraphs_with(KeywordId k) const {
    const auto s = slot(k);
    if (s < 0) return {};
    return lists_[static_cast<std::size_t>(s)].subgraphs;
}

std::optional<KeywordId> PoiInvertedIndex::find_tag(const std::string& tag) const {
    for (const auto& info : catalog_)
        if (info.tag == tag) return info.keyword_id;
    return std::nullopt;
}

PoiInvertedIndex build_poi_index(const RoadNetwork& net, const PartitionIndex& pi) {
    return PoiInvertedIndex(net, pi);
}

namespace {

std::optional<double> best_rating(const PoiInvertedIndex& idx, KeywordId k, const std::vector<char>* restrict,
                                  const PoiFilter& admissible) {
    for (auto p : idx.postings(k)) {
        if (restrict && !(*restrict)[static_cast<std::size_t>(idx.subgraph_of(p))]) continue;
        const auto& poi = idx.poi(p);
        if (admissible && !admissible(poi)) continue;
        return poi.rating;
    }
    return std::nullopt;
}

}  // namespace

std::optional<double> max_cumulative_rating(const PoiInvertedIndex& idx, std::span<const KeywordId> keywords,
                                            const std::vector<char>* restrict, const PoiFilter& admissible) {
    double sum = 0.0;
    for (auto k : keywords) {
        auto best = best_rating(idx, k, restrict, admissible);
        if (!best) return std::nullopt;
        sum += *best;
    }
    return sum;
}

std::optional<double> max_cumulative_rating_with_forced_poi(const PoiInvertedIndex& idx,
                                                            std::span<const KeywordId> keywords,
                                                            std::span<const PoiId> forced_candidates,
                                                            const std::vector<char>* restrict,
                                                            const PoiFilter& admissible) {
    std::vector<std::optional<double>> best(keywords.size());
    std::vector<double> forced(keywords.size(), -kInfinity);
    bool any = false;
    for (auto p : forced_candidates) {
        const auto& poi = idx.poi(p);
        auto it = std::find(keywords.begin(), keywords.end(), poi.keyword);
        if (it == keywords.end()) continue;
        auto& f = forced[static_cast<std::size_t>(it - keywords.begin())];
        f = std::max(f, poi.rating);
        any = true;
    }
    if (!any) return std::nullopt;
    for (std::size_t i = 0; i < keywords.size(); ++i) best[i] = best_rating(idx, keywords[i], restrict, admissible);

    std::optional<double> result;
    for (std::size_t t = 0; t < keywords.size(); ++t) {
        if (forced[t] == -kInfinity) continue;
        double sum = forced[t];
        bool ok = true;
        for (std::size_t j = 0; j < keywords.size() && ok; ++j) {
            if (j == t) continue;
            if (!best[j]) ok = false;
            else sum += *best[j];
        }
        if (ok && (!result || sum > *result)) result = sum;
    }
    return result;
}

}  // namespace katr
