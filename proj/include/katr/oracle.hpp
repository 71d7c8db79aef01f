#pragma once

#include "katr/engine.hpp"

namespace katr {

enum class OracleDistances { dijkstra, floyd_warshall };

struct OracleOptions {
    double max_enumeration = 1e7;  // CP-Sets × visit orders
    OracleDistances distances = OracleDistances::dijkstra;
    bool expand_paths = true;
};

struct OracleResult {
    std::vector<CpRoute> routes;
    double cp_sets = 0;
    double permutations = 0;
    bool partial = false;
    bool infeasible_budget = false;
};

/// Exhaustive top-k: every CP-Set, every visit order, exact legs. Uses the
/// engine's score and ranking so results compare one to one.
OracleResult oracle_topk(const RoadNetwork& net, const Query& q, const OracleOptions& options = {});

/// All-pairs distances by Floyd–Warshall, row-major |V|×|V|.
std::vector<double> floyd_warshall(const RoadNetwork& net);

}  // namespace katr
