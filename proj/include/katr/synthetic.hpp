#pragma once

#include <cstdint>
#include <string>

#include "katr/graph.hpp"

namespace katr {

enum class RatingDistribution {
    uniform,  // U(1, 5)
    stars,    // half-star steps 3.0..5.0, skewed towards the top
};

RatingDistribution parse_rating_distribution(const std::string& name);
std::string to_string(RatingDistribution dist);

struct SyntheticParams {
    std::uint64_t seed = 1;
    std::size_t vertices = 5000;
    double avg_degree = 6.0;
    std::size_t keywords = 20;
    std::size_t pois_per_keyword = 10;
    RatingDistribution ratings = RatingDistribution::stars;
    // Integral weights (coordinates scaled by this and rounded up) instead
    // of exact coordinate distances. 0 keeps real-valued weights.
    double integer_weight_scale = 0.0;
};

/// Random geometric network in the unit square: each vertex is joined to
/// its two nearest neighbours, then the shortest remaining near-neighbour
/// pairs are added until the mean degree is avg_degree. Weights are
/// coordinate distances, POIs sit on uniformly drawn vertices.
RawNetwork generate_synthetic(const SyntheticParams& params);

}  // namespace katr
