#include "katr/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <set>
#include <tuple>

namespace katr {

RatingDistribution parse_rating_distribution(const std::string& name) {
    if (name == "uniform") return RatingDistribution::uniform;
    if (name == "stars") return RatingDistribution::stars;
    throw Error(ErrorCode::invalid_input, "unknown rating distribution '" + name + "'");
}

std::string to_string(RatingDistribution dist) {
    return dist == RatingDistribution::uniform ? "uniform" : "stars";
}

namespace {

constexpr std::array<const char*, 24> kTagNames = {
    "cafe",     "restaurant", "museum",  "park",     "pharmacy", "bank",      "bakery",  "library",
    "cinema",   "gym",        "hotel",   "bar",      "school",   "hospital",  "market",  "theatre",
    "bookshop", "florist",    "zoo",     "gallery",  "stadium",  "aquarium",  "pub",     "spa",
};

}  // namespace

RawNetwork generate_synthetic(const SyntheticParams& p) {
    if (p.vertices < 2) throw Error(ErrorCode::invalid_input, "a network needs at least 2 vertices");
    if (!(p.avg_degree >= 2.0) || p.avg_degree > static_cast<double>(p.vertices - 1))
        throw Error(ErrorCode::invalid_input, "average degree must lie in [2, vertices - 1]");
    if (p.keywords == 0 && p.pois_per_keyword > 0)
        throw Error(ErrorCode::invalid_input, "POIs need at least one keyword");

    std::mt19937_64 rng(p.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    RawNetwork raw;
    const std::size_t n = p.vertices;
    raw.vertices.reserve(n);
    for (std::size_t i = 0; i < n; ++i) raw.vertices.push_back(RawVertex{static_cast<std::int64_t>(i), unit(rng), unit(rng)});

    // Uniform grid with about two points per cell for the neighbour search.
    const auto cells = static_cast<std::size_t>(std::max(1.0, std::floor(std::sqrt(static_cast<double>(n) / 2.0))));
    std::vector<std::vector<std::size_t>> grid(cells * cells);
    auto cell_of = [&](double x) { return std::min(cells - 1, static_cast<std::size_t>(x * static_cast<double>(cells))); };
    for (std::size_t i = 0; i < n; ++i)
        grid[cell_of(raw.vertices[i].lat) * cells + cell_of(raw.vertices[i].lon)].push_back(i);

    // Each vertex keeps its two nearest neighbours; the shortest remaining
    // candidate pairs are added until the mean degree reaches avg_degree.
    const std::size_t knn = std::min(n - 1, static_cast<std::size_t>(std::ceil(p.avg_degree)) + 2);
    const std::size_t base = std::min<std::size_t>(2, n - 1);
    const auto target = static_cast<std::size_t>(std::llround(p.avg_degree * static_cast<double>(n) / 2.0));
    std::set<std::pair<std::size_t, std::size_t>> edges;
    std::vector<std::tuple<double, std::size_t, std::size_t>> pool;
    std::vector<std::pair<double, std::size_t>> cand;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& vi = raw.vertices[i];
        const auto cx = static_cast<std::int64_t>(cell_of(vi.lon));
        const auto cy = static_cast<std::int64_t>(cell_of(vi.lat));
        const double cell = 1.0 / static_cast<double>(cells);
        for (std::int64_t r = 0;; ++r) {
            cand.clear();
            for (std::int64_t y = cy - r; y <= cy + r; ++y) {
                for (std::int64_t x = cx - r; x <= cx + r; ++x) {
                    if (x < 0 || y < 0 || x >= static_cast<std::int64_t>(cells) || y >= static_cast<std::int64_t>(cells))
                        continue;
                    for (auto j : grid[static_cast<std::size_t>(y) * cells + static_cast<std::size_t>(x)]) {
                        if (j == i) continue;
                        const auto& vj = raw.vertices[j];
                        cand.emplace_back(std::hypot(vi.lon - vj.lon, vi.lat - vj.lat), j);
                    }
                }
            }
            // Points within r cells are complete up to distance r·cell.
            const bool covers_all = r >= static_cast<std::int64_t>(cells);
            if (cand.size() >= knn || covers_all) {
                std::sort(cand.begin(), cand.end());
                if (covers_all || cand[knn - 1].first <= static_cast<double>(r) * cell) break;
            }
        }
        for (std::size_t a = 0; a < std::min(knn, cand.size()); ++a) {
            const auto key = std::make_pair(std::min(i, cand[a].second), std::max(i, cand[a].second));
            if (a < base) edges.insert(key);
            else pool.emplace_back(cand[a].first, key.first, key.second);
        }
    }
    std::sort(pool.begin(), pool.end());
    for (const auto& [d, u, v] : pool) {
        if (edges.size() >= target) break;
        edges.emplace(u, v);
    }
    for (const auto& [u, v] : edges) {
        const auto& a = raw.vertices[u];
        const auto& b = raw.vertices[v];
        double w = std::hypot(a.lon - b.lon, a.lat - b.lat);
        if (p.integer_weight_scale > 0.0) w = std::max(1.0, std::ceil(w * p.integer_weight_scale));
        if (!(w > 0.0)) w = 1e-9;
        raw.edges.push_back(RawEdge{static_cast<std::int64_t>(u), static_cast<std::int64_t>(v), w});
    }

    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::uniform_real_distribution<double> uniform_rating(1.0, 5.0);
    // Half-star steps 3.0 .. 5.0 with weights leaning towards 4.0 - 4.5.
    std::discrete_distribution<int> star_step({1, 2, 4, 6, 3});
    for (std::size_t k = 0; k < p.keywords; ++k) {
        raw.tags[static_cast<KeywordId>(k)] =
            k < kTagNames.size() ? kTagNames[k] : "tag" + std::to_string(k);
        for (std::size_t j = 0; j < p.pois_per_keyword; ++j) {
            const double r = p.ratings == RatingDistribution::uniform ? uniform_rating(rng)
                                                                       : 3.0 + 0.5 * star_step(rng);
            raw.pois.push_back(RawPoi{static_cast<std::int64_t>(pick(rng)), static_cast<KeywordId>(k), r});
        }
    }
    return raw;
}

}  // namespace katr
