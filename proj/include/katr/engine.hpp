#pragma once

#include <chrono>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "katr/index.hpp"
#include "katr/route.hpp"
#include "katr/search_graph.hpp"

namespace katr {

inline constexpr std::size_t kMaxKeywords = 8;
// Slack used by every pruning comparison, always in the keep direction.
inline constexpr double kScoreTolerance = 1e-9;

struct Query {
    VertexId source = 0;
    std::vector<KeywordId> keywords;
    std::size_t k = 1;
    double alpha = 0.5;
    bool fixed_order = false;
    std::optional<double> distance_budget;  // normalized units
    std::optional<VertexId> destination;
    bool identical_ratings = false;
    std::optional<double> common_rating;  // identical_ratings only; default is the top rating
};

struct CpRoute {
    std::vector<PoiId> pois;  // visit order
    std::vector<VertexId> pivots;  // source, POI vertices, destination
    double graph_distance = kInfinity;
    double euclid_distance = 0.0;
    double rating_sum = 0.0;
    double score = -kInfinity;
    std::vector<VertexId> path;
};

struct PruneCounters {
    std::size_t sg_rn = 0;
    std::size_t sg_sr = 0;
    std::size_t sg_bp = 0;
    double cps_rn = 0;
    double cps_sr = 0;
    std::size_t cps_bp = 0;
    std::size_t cps_emitted = 0;
    std::size_t cps_eliminated = 0;
    std::size_t cps_over_budget = 0;
    std::size_t cps_evaluated = 0;
    std::size_t cpr_sr = 0;
    std::size_t cpr_edrs = 0;
    std::size_t sg_pruned = 0;
    std::size_t pois_pruned = 0;
    std::size_t visited = 0;
    std::size_t distance_computations = 0;
    std::size_t safe_region_iterations = 0;
};

struct QueryResult {
    std::vector<CpRoute> routes;  // score desc, tie-break applied
    PruneCounters counters;
    bool partial = false;  // fewer than k routes exist
    bool timed_out = false;
    bool infeasible_budget = false;  // a budget was given and nothing fits
    std::optional<double> established_d_ub;
    double final_d_ub = kInfinity;
};

/// Instrumentation hooks; default implementations do nothing.
class QueryObserver {
public:
    virtual ~QueryObserver() = default;
    virtual void on_settle(VertexId, double) {}
    virtual void on_safe_region(double /*d_ub*/, const std::vector<char>& /*region*/) {}
    virtual void on_subgraph_pruned(SubgraphId, std::span<const PoiId> /*pruned*/, double /*bound*/,
                                    double /*sc_min*/) {}
    virtual void on_cpset_pruned(std::span<const PoiId> /*set*/, double /*bound*/, double /*sc_min*/) {}
    virtual void on_d_ub(double) {}
};

struct EngineOptions {
    bool safe_region = true;
    bool subgraph_pruning = true;
    bool edrs_early_stop = true;
    bool expand_paths = true;
    std::optional<std::chrono::steady_clock::time_point> deadline;
    QueryObserver* observer = nullptr;
};

double score(double alpha, double graph_distance, double rating_sum);

/// Safe Region radius ((1-a)·tau_u - sc_min)/a clamped at 0. Needs a > 0.
double compute_d_ub(double alpha, double tau_u, double sc_min);

double subgraph_upper_bound(double alpha, double d_lb, double tau_max);

/// Ranking order shared by the engine and the oracle: score desc, distance
/// asc, pivot sequence, POI ids.
bool route_better(const CpRoute& a, const CpRoute& b);

/// Visit orders of m stops: all m! in lexicographic order, or the identity.
std::vector<std::vector<std::uint8_t>> visit_orders(std::size_t m, bool fixed_order);

struct CpSetBound {
    double ed_m = kInfinity;
    double score_bound = -kInfinity;
    std::vector<double> euclid;  // per visit order, parallel to the order list
};

/// ED_m and SC_CPS for one CP-Set (POIs in keyword order).
CpSetBound cpset_upper_bound(const RoadNetwork& net, VertexId source, std::optional<VertexId> destination,
                             std::span<const PoiId> pois, double rating_sum, double alpha,
                             const std::vector<std::vector<std::uint8_t>>& orders);

struct EdrsResult {
    CpRoute route;
    std::size_t evaluated = 0;
    std::size_t total = 0;
};

/// Best visit order of one CP-Set. `first_leg` gives exact source→POI
/// distances when known (else the router is used).
EdrsResult edrs(const RoadNetwork& net, LegRouter& router, VertexId source, std::optional<VertexId> destination,
                std::span<const PoiId> pois, double rating_sum, double alpha,
                const std::vector<std::vector<std::uint8_t>>& orders, const CpSetBound& bound, bool early_stop,
                const std::function<double(PoiId)>& first_leg = {});

void validate_query(const KatrIndex& ix, const Query& q);

QueryResult katr_query(const KatrIndex& ix, const Query& q, const EngineOptions& options = {});

/// Staged execution of one query, exposing the phases for tests.
class KatrSearch {
public:
    KatrSearch(const KatrIndex& ix, Query q, EngineOptions options = {});
    ~KatrSearch();
    KatrSearch(const KatrSearch&) = delete;
    KatrSearch& operator=(const KatrSearch&) = delete;

    /// Explores until at least k CP-Sets are known (or the graph is
    /// exhausted), without evaluating them. Returns the emitted sets.
    std::vector<std::vector<PoiId>> di_exploration();
    /// Evaluates the seeds and fixes the Safe Region.
    void establish_safe_region();
    /// Continues inside the region until it is fully explored.
    void explore();
    QueryResult finish();

    QueryResult run();

    const SearchGraph& search_graph() const;
    /// Settle order so far (global vertex ids).
    const std::vector<VertexId>& settle_order() const;
    double d_ub() const;
    double sc_min() const;
    /// tau_u after each establishment iteration.
    const std::vector<double>& establishment_taus() const;
    const std::vector<char>& region() const;

private:
    struct State;
    std::unique_ptr<State> s_;
};

/// Diagnostic scope estimate: fraction of the area covered by the Safe
/// Region under uniform POIs (area z, N_P POIs per keyword, ratings in
/// [tau_l, tau_h]).
double estimate_search_fraction(double z, std::size_t m, std::size_t k, double n_p, double alpha, double tau_h,
                                double tau_l);
/// Seed-area diameter term 2·sqrt(k·z / (N_P^m·pi)).
double seed_diameter(double z, std::size_t m, std::size_t k, double n_p);

}  // namespace katr
