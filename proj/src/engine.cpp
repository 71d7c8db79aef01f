#include "katr/engine.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <queue>

namespace katr {

double score(double alpha, double graph_distance, double rating_sum) {
    return -alpha * graph_distance + (1.0 - alpha) * rating_sum;
}

double compute_d_ub(double alpha, double tau_u, double sc_min) {
    if (!(alpha > 0.0))
        throw Error(ErrorCode::invalid_query, "the Safe Region radius is undefined for alpha = 0");
    return std::max(0.0, ((1.0 - alpha) * tau_u - sc_min) / alpha);
}

double subgraph_upper_bound(double alpha, double d_lb, double tau_max) { return score(alpha, d_lb, tau_max); }

bool route_better(const CpRoute& a, const CpRoute& b) {
    if (std::abs(a.score - b.score) > kScoreTolerance) return a.score > b.score;
    if (std::abs(a.graph_distance - b.graph_distance) > kScoreTolerance) return a.graph_distance < b.graph_distance;
    if (a.pivots != b.pivots) return a.pivots < b.pivots;
    return a.pois < b.pois;
}

std::vector<std::vector<std::uint8_t>> visit_orders(std::size_t m, bool fixed_order) {
    std::vector<std::uint8_t> perm(m);
    std::iota(perm.begin(), perm.end(), std::uint8_t{0});
    std::vector<std::vector<std::uint8_t>> out;
    if (fixed_order) {
        out.push_back(perm);
        return out;
    }
    do {
        out.push_back(perm);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return out;
}

CpSetBound cpset_upper_bound(const RoadNetwork& net, VertexId source, std::optional<VertexId> destination,
                             std::span<const PoiId> pois, double rating_sum, double alpha,
                             const std::vector<std::vector<std::uint8_t>>& orders) {
    const std::size_t m = pois.size();
    // e[i][j] with index m as the source and m + 1 as the destination.
    std::vector<double> e((m + 2) * (m + 2), 0.0);
    auto at = [&](std::size_t i) {
        if (i < m) return net.poi(pois[i]).vertex;
        return i == m ? source : *destination;
    };
    for (std::size_t i = 0; i < m + 2; ++i) {
        if (i == m + 1 && !destination) break;
        for (std::size_t j = 0; j < i; ++j) {
            const double d = euclid_lower_bound(net, at(i), at(j));
            e[i * (m + 2) + j] = e[j * (m + 2) + i] = d;
        }
    }
    CpSetBound out;
    out.euclid.reserve(orders.size());
    for (const auto& order : orders) {
        double total = e[m * (m + 2) + order[0]];
        for (std::size_t i = 1; i < m; ++i) total += e[order[i - 1] * (m + 2) + order[i]];
        if (destination) total += e[order[m - 1] * (m + 2) + m + 1];
        out.euclid.push_back(total);
        out.ed_m = std::min(out.ed_m, total);
    }
    out.score_bound = score(alpha, out.ed_m, rating_sum);
    return out;
}

EdrsResult edrs(const RoadNetwork& net, LegRouter& router, VertexId source, std::optional<VertexId> destination,
                std::span<const PoiId> pois, double rating_sum, double alpha,
                const std::vector<std::vector<std::uint8_t>>& orders, const CpSetBound& bound, bool early_stop,
                const std::function<double(PoiId)>& first_leg) {
    std::vector<std::size_t> rank(orders.size());
    std::iota(rank.begin(), rank.end(), std::size_t{0});
    std::stable_sort(rank.begin(), rank.end(),
                     [&](std::size_t a, std::size_t b) { return bound.euclid[a] < bound.euclid[b]; });

    EdrsResult out;
    out.total = orders.size();
    CpRoute candidate;
    candidate.rating_sum = rating_sum;
    for (auto r : rank) {
        if (early_stop && std::isfinite(out.route.graph_distance) &&
            bound.euclid[r] >= out.route.graph_distance + kScoreTolerance)
            break;
        const auto& order = orders[r];
        candidate.pois.clear();
        candidate.pivots.assign(1, source);
        for (auto i : order) {
            candidate.pois.push_back(pois[i]);
            candidate.pivots.push_back(net.poi(pois[i]).vertex);
        }
        if (destination) candidate.pivots.push_back(*destination);
        double gd = first_leg ? first_leg(candidate.pois[0]) : router.distance(source, candidate.pivots[1]);
        for (std::size_t i = 2; i < candidate.pivots.size(); ++i)
            gd += router.distance(candidate.pivots[i - 1], candidate.pivots[i]);
        ++out.evaluated;
        candidate.graph_distance = gd;
        candidate.euclid_distance = bound.euclid[r];
        candidate.score = score(alpha, gd, rating_sum);
        if (!std::isfinite(out.route.graph_distance) || route_better(candidate, out.route)) out.route = candidate;
    }
    return out;
}

void validate_query(const KatrIndex& ix, const Query& q) {
    if (!ix.net.valid_vertex(q.source))
        throw Error(ErrorCode::unknown_vertex, "unknown source vertex " + std::to_string(q.source), q.source);
    if (q.keywords.empty()) throw Error(ErrorCode::invalid_query, "query has no keywords");
    if (q.keywords.size() > kMaxKeywords)
        throw Error(ErrorCode::invalid_query,
                    "at most " + std::to_string(kMaxKeywords) + " keywords are supported per query",
                    static_cast<std::int64_t>(q.keywords.size()));
    for (std::size_t i = 0; i < q.keywords.size(); ++i)
        for (std::size_t j = 0; j < i; ++j)
            if (q.keywords[i] == q.keywords[j])
                throw Error(ErrorCode::invalid_query, "duplicate keyword " + std::to_string(q.keywords[i]),
                            q.keywords[i]);
    if (q.k < 1) throw Error(ErrorCode::invalid_query, "k must be at least 1");
    if (!(q.alpha >= 0.0 && q.alpha <= 1.0)) throw Error(ErrorCode::invalid_query, "alpha must lie in [0, 1]");
    if (q.destination && !ix.net.valid_vertex(*q.destination))
        throw Error(ErrorCode::unknown_vertex, "unknown destination vertex " + std::to_string(*q.destination),
                    *q.destination);
    if (q.distance_budget && !(*q.distance_budget >= 0.0))
        throw Error(ErrorCode::invalid_query, "distance budget must be non-negative");
    if (q.common_rating && !(*q.common_rating > 0.0 && std::isfinite(*q.common_rating)))
        throw Error(ErrorCode::invalid_query, "common rating must be positive");
    for (auto k : q.keywords)
        if (!ix.pois.has_keyword(k))
            throw Error(ErrorCode::uncoverable_keyword, "keyword " + std::to_string(k) + " has no POI", k);
}

namespace {

constexpr std::uint8_t kProcessed = 1;
constexpr std::uint8_t kPruned = 2;

double distance_slack(double d) { return std::isfinite(d) ? d + 1e-12 * (1.0 + std::abs(d)) : d; }

}  // namespace

struct KatrSearch::State {
    State(const KatrIndex& index, Query query, EngineOptions options)
        : ix(index), q(std::move(query)), opt(options),
          sg(build_search_graph(ix.net, ix.partition, ix.pois, q.source, q.keywords)), router(ix) {}

    const KatrIndex& ix;
    Query q;
    EngineOptions opt;
    SearchGraph sg;
    LegRouter router;
    std::size_t m = 0;
    std::vector<std::vector<std::uint8_t>> orders;
    double common = 0.0;
    SubgraphId source_sg = 0;

    std::vector<std::int8_t> slot_of;
    std::vector<std::uint8_t> poi_state;
    std::vector<double> poi_dist;

    std::vector<double> dist;
    std::vector<char> settled;
    using Item = std::pair<double, std::int32_t>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    std::vector<VertexId> order;
    std::size_t pops = 0;

    std::vector<char> entered, bypassed, sg_pruned, sg_processed;
    std::vector<double> last_eval;

    std::vector<std::vector<PoiId>> found;
    std::vector<std::vector<PoiId>> pending;
    std::vector<std::vector<PoiId>> seeds;
    std::vector<CpRoute> topk;

    double d_ub = kInfinity;
    bool established = false;
    bool region_active = false;
    std::vector<char> region;
    std::vector<double> nearest;
    std::vector<double> taus;
    std::vector<std::size_t> cur_any, cur_unproc;
    std::optional<double> est_d_ub;
    std::vector<char> est_region;

    bool done = false;
    bool timed_out = false;
    PruneCounters c;

    double rating(PoiId p) const { return q.identical_ratings ? common : ix.net.poi(p).rating; }
    bool full() const { return topk.size() >= q.k; }
    double sc_min() const { return full() ? topk.back().score : -kInfinity; }
    double budget() const { return q.distance_budget.value_or(kInfinity); }

    void init();
    void step();
    void relax(std::int32_t node, double d, SubgraphId s);
    void process(PoiId p, double d);
    void emit(std::vector<PoiId> set);
    void flush_pending();
    void evaluate(const std::vector<PoiId>& set, const CpSetBound* known = nullptr);
    void insert(CpRoute route);
    bool evaluate_subgraph(SubgraphId s, double d_lb);
    void establish();
    std::optional<double> inclusive_tau(const std::vector<char>& mask) const;
    double radius(double tau) const;
    void refine();
    bool admissible(PoiId p) const {
        return !(poi_state[static_cast<std::size_t>(p)] & kPruned) &&
               (!region_active || region[static_cast<std::size_t>(ix.pois.subgraph_of(p))]);
    }
    bool in_est_region(PoiId p) const {
        return !est_d_ub || est_region[static_cast<std::size_t>(ix.pois.subgraph_of(p))];
    }
    void seed_until_full();
    QueryResult result();
};

void KatrSearch::State::init() {
    m = q.keywords.size();
    orders = visit_orders(m, q.fixed_order);
    source_sg = ix.partition.assignment(q.source);
    if (q.identical_ratings) {
        common = 0.0;
        if (q.common_rating) {
            common = *q.common_rating;
        } else {
            for (const auto& p : ix.net.pois()) common = std::max(common, p.rating);
            if (common <= 0.0) common = 10.0;
        }
    }
    slot_of.assign(ix.net.poi_count(), -1);
    for (std::size_t i = 0; i < m; ++i)
        for (auto p : sg.km_pois(i)) slot_of[static_cast<std::size_t>(p)] = static_cast<std::int8_t>(i);
    poi_state.assign(ix.net.poi_count(), 0);
    poi_dist.assign(ix.net.poi_count(), kInfinity);
    dist.assign(sg.node_count(), kInfinity);
    settled.assign(sg.node_count(), 0);
    const auto nsg = ix.partition.subgraph_count();
    entered.assign(nsg, 0);
    bypassed.assign(nsg, 0);
    sg_pruned.assign(nsg, 0);
    sg_processed.assign(nsg, 0);
    last_eval.assign(nsg, std::numeric_limits<double>::quiet_NaN());
    found.resize(m);
    d_ub = budget();
    const auto s = sg.node_of(q.source);
    dist[static_cast<std::size_t>(s)] = 0.0;
    heap.emplace(0.0, s);

    c.sg_rn = sg.relevant_count();
    c.cps_rn = 1.0;
    for (std::size_t i = 0; i < m; ++i) c.cps_rn *= static_cast<double>(sg.km_pois(i).size());
}

void KatrSearch::State::step() {
    if (done) return;
    if (opt.deadline && (++pops & 63) == 0 && std::chrono::steady_clock::now() > *opt.deadline) {
        timed_out = done = true;
        return;
    }
    while (!heap.empty() && settled[static_cast<std::size_t>(heap.top().second)]) heap.pop();
    if (heap.empty()) {
        done = true;
        return;
    }
    auto [d, node] = heap.top();
    if (d > distance_slack(d_ub)) {
        done = true;
        return;
    }
    heap.pop();
    settled[static_cast<std::size_t>(node)] = 1;
    ++c.visited;
    const VertexId v = sg.vertex(node);
    order.push_back(v);
    if (opt.observer) opt.observer->on_settle(v, d);
    const SubgraphId s = ix.partition.assignment(v);
    const auto si = static_cast<std::size_t>(s);
    if (sg.relevant(s) && !entered[si]) {
        entered[si] = 1;
        if (evaluate_subgraph(s, d)) bypassed[si] = 1;
    }
    relax(node, d, s);
    for (auto p : ix.net.pois_at(v)) {
        const auto pi = static_cast<std::size_t>(p);
        if (slot_of[pi] < 0 || (poi_state[pi] & kPruned)) continue;
        if (!std::isnan(last_eval[si]) ? last_eval[si] != sc_min() : full()) {
            evaluate_subgraph(s, d);
            if (poi_state[pi] & kPruned) continue;
        }
        process(p, d);
    }
}

void KatrSearch::State::relax(std::int32_t node, double d, SubgraphId s) {
    auto push = [&](std::int32_t to, double w) {
        const auto ti = static_cast<std::size_t>(to);
        if (settled[ti]) return;
        const double nd = d + w;
        if (nd < dist[ti]) {
            dist[ti] = nd;
            heap.emplace(nd, to);
        }
    };
    if (!bypassed[static_cast<std::size_t>(s)]) {
        for (const auto& a : sg.arcs(node)) push(a.to, a.weight);
        return;
    }
    const VertexId v = sg.vertex(node);
    for (const auto& a : sg.arcs(node))
        if (ix.partition.assignment(sg.vertex(a.to)) != s) push(a.to, a.weight);
    for (auto b : ix.partition.subgraph(s).borders) {
        if (b == v) continue;
        const double w = ix.partition.intra_distance(v, b);
        if (std::isfinite(w)) push(sg.node_of(b), w);
    }
}

bool KatrSearch::State::evaluate_subgraph(SubgraphId s, double d_lb) {
    const auto si = static_cast<std::size_t>(s);
    last_eval[si] = sc_min();
    if (!opt.subgraph_pruning || !full() || s == source_sg || sg_pruned[si]) return false;
    std::vector<PoiId> forced;
    for (auto k : q.keywords)
        for (auto p : ix.pois.postings(k, s))
            if (!poi_state[static_cast<std::size_t>(p)]) forced.push_back(p);
    if (forced.empty()) return false;

    std::optional<double> tau_max;
    const std::vector<char>* restrict = region_active ? &region : nullptr;
    auto ok = [this](const Poi& p) { return !(poi_state[static_cast<std::size_t>(p.id)] & kPruned); };
    if (q.identical_ratings) {
        // Every CP-Set carries m·common; only feasibility matters.
        tau_max = max_cumulative_rating_with_forced_poi(ix.pois, q.keywords, forced, restrict, ok).has_value()
                      ? std::optional<double>(static_cast<double>(m) * common)
                      : std::nullopt;
    } else {
        tau_max = max_cumulative_rating_with_forced_poi(ix.pois, q.keywords, forced, restrict, ok);
    }
    const double bound = tau_max ? subgraph_upper_bound(q.alpha, d_lb, *tau_max) : -kInfinity;
    if (!(bound < sc_min() - kScoreTolerance)) return false;

    for (auto p : forced) poi_state[static_cast<std::size_t>(p)] |= kPruned;
    sg_pruned[si] = 1;
    ++c.sg_pruned;
    c.pois_pruned += forced.size();
    if (opt.observer) opt.observer->on_subgraph_pruned(s, forced, bound, sc_min());
    return true;
}

void KatrSearch::State::process(PoiId p, double d) {
    const auto pi = static_cast<std::size_t>(p);
    poi_state[pi] |= kProcessed;
    poi_dist[pi] = d;
    sg_processed[static_cast<std::size_t>(ix.pois.subgraph_of(p))] = 1;
    const auto t = static_cast<std::size_t>(slot_of[pi]);
    found[t].push_back(p);

    std::vector<std::vector<PoiId>> pools(m);
    for (std::size_t j = 0; j < m; ++j) {
        if (j == t) {
            pools[j] = {p};
            continue;
        }
        for (auto o : found[j])
            if (poi_dist[static_cast<std::size_t>(o)] <= distance_slack(d_ub)) pools[j].push_back(o);
        if (pools[j].empty()) {
            if (region_active) refine();
            return;
        }
    }
    std::vector<std::size_t> pos(m, 0);
    while (true) {
        std::vector<PoiId> set(m);
        for (std::size_t j = 0; j < m; ++j) set[j] = pools[j][pos[j]];
        emit(std::move(set));
        std::size_t j = 0;
        while (j < m && ++pos[j] == pools[j].size()) pos[j++] = 0;
        if (j == m) break;
    }
    // Every set holding p is known now, so it leaves the undiscovered pool.
    if (region_active) refine();
}

void KatrSearch::State::emit(std::vector<PoiId> set) {
    ++c.cps_emitted;
    if (!established) {
        seeds.push_back(set);
        pending.push_back(std::move(set));
        return;
    }
    if (std::all_of(set.begin(), set.end(), [this](PoiId p) { return in_est_region(p); })) ++c.cps_bp;
    evaluate(set);
}

void KatrSearch::State::flush_pending() {
    if (pending.empty()) return;
    struct Item {
        std::vector<PoiId> set;
        CpSetBound bound;
    };
    std::vector<Item> items;
    items.reserve(pending.size());
    for (auto& set : pending) {
        double tau = 0.0;
        for (auto p : set) tau += rating(p);
        auto b = cpset_upper_bound(ix.net, q.source, q.destination, set, tau, q.alpha, orders);
        items.push_back(Item{std::move(set), std::move(b)});
    }
    pending.clear();
    std::stable_sort(items.begin(), items.end(),
                     [](const Item& a, const Item& b) { return a.bound.score_bound > b.bound.score_bound; });
    for (const auto& it : items) evaluate(it.set, &it.bound);
}

void KatrSearch::State::evaluate(const std::vector<PoiId>& set, const CpSetBound* known) {
    double tau = 0.0;
    for (auto p : set) tau += rating(p);
    CpSetBound local;
    if (!known) {
        local = cpset_upper_bound(ix.net, q.source, q.destination, set, tau, q.alpha, orders);
        known = &local;
    }
    if (known->ed_m > budget()) {
        ++c.cps_over_budget;
        return;
    }
    if (full() && known->score_bound < sc_min() - kScoreTolerance) {
        ++c.cps_eliminated;
        if (opt.observer) opt.observer->on_cpset_pruned(set, known->score_bound, sc_min());
        return;
    }
    auto res = edrs(ix.net, router, q.source, q.destination, set, tau, q.alpha, orders, *known,
                    opt.edrs_early_stop, [this](PoiId p) { return poi_dist[static_cast<std::size_t>(p)]; });
    ++c.cps_evaluated;
    c.cpr_sr += res.total;
    c.cpr_edrs += res.evaluated;
    if (!std::isfinite(res.route.graph_distance)) return;
    if (res.route.graph_distance > budget()) {
        ++c.cps_over_budget;
        return;
    }
    insert(std::move(res.route));
}

void KatrSearch::State::insert(CpRoute route) {
    if (full() && !route_better(route, topk.back())) return;
    const double before = sc_min();
    auto it = topk.begin();
    while (it != topk.end() && !route_better(route, *it)) ++it;
    topk.insert(it, std::move(route));
    if (topk.size() > q.k) topk.pop_back();
    if (region_active && sc_min() > before) refine();
}

std::optional<double> KatrSearch::State::inclusive_tau(const std::vector<char>& mask) const {
    auto ok = [this](const Poi& p) { return !(poi_state[static_cast<std::size_t>(p.id)] & kPruned); };
    auto tau = max_cumulative_rating(ix.pois, q.keywords, &mask, ok);
    if (tau && q.identical_ratings) tau = static_cast<double>(m) * common;
    return tau;
}

double KatrSearch::State::radius(double tau) const {
    return std::min(budget(), compute_d_ub(q.alpha, tau, sc_min() - kScoreTolerance));
}

void KatrSearch::State::establish() {
    if (established) return;
    established = true;
    if (!opt.safe_region || !(q.alpha > 0.0) || !full()) {
        d_ub = budget();
        return;
    }
    const auto nsg = ix.partition.subgraph_count();
    std::vector<char> all(nsg, 1);
    auto tau = inclusive_tau(all);
    if (!tau) {
        d_ub = -kInfinity;
        done = true;
        return;
    }
    taus.push_back(*tau);
    double radius_i = radius(*tau);

    // Range search over the border skeleton from the source.
    const auto& sk = ix.skeleton;
    const auto& pi = ix.partition;
    nearest.assign(nsg, kInfinity);
    nearest[static_cast<std::size_t>(source_sg)] = 0.0;
    std::vector<double> bd(sk.node_count(), kInfinity);
    using Item = std::pair<double, std::int32_t>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> h;
    if (sk.node_of(q.source) >= 0) {
        bd[static_cast<std::size_t>(sk.node_of(q.source))] = 0.0;
        h.emplace(0.0, sk.node_of(q.source));
    } else {
        for (auto b : pi.subgraph(source_sg).borders) {
            const double w = pi.intra_distance(q.source, b);
            const auto n = sk.node_of(b);
            if (w < bd[static_cast<std::size_t>(n)]) {
                bd[static_cast<std::size_t>(n)] = w;
                h.emplace(w, n);
            }
        }
    }
    const double limit = distance_slack(radius_i);
    while (!h.empty()) {
        auto [d, x] = h.top();
        h.pop();
        if (d > bd[static_cast<std::size_t>(x)]) continue;
        if (d > limit) break;
        auto& near = nearest[static_cast<std::size_t>(pi.assignment(sk.vertex(x)))];
        near = std::min(near, d);
        for (const auto& a : sk.arcs(x)) {
            const double nd = d + a.weight;
            if (nd < bd[static_cast<std::size_t>(a.to)]) {
                bd[static_cast<std::size_t>(a.to)] = nd;
                h.emplace(nd, a.to);
            }
        }
    }

    region.assign(nsg, 0);
    while (true) {
        ++c.safe_region_iterations;
        for (std::size_t i = 0; i < nsg; ++i) region[i] = nearest[i] <= distance_slack(radius_i);
        auto next = inclusive_tau(region);
        if (!next || !(*next < taus.back())) break;
        taus.push_back(*next);
        radius_i = radius(*next);
    }
    d_ub = radius_i;
    region_active = true;
    est_d_ub = d_ub;
    est_region = region;
    c.sg_sr = 0;
    for (std::size_t i = 0; i < nsg; ++i)
        if (region[i] && sg.relevant(static_cast<SubgraphId>(i))) ++c.sg_sr;
    c.cps_sr = 1.0;
    for (std::size_t t = 0; t < m; ++t) {
        std::size_t n = 0;
        for (auto p : sg.km_pois(t))
            if (in_est_region(p)) ++n;
        c.cps_sr *= static_cast<double>(n);
    }
    cur_any.assign(m, 0);
    cur_unproc.assign(m, 0);
    if (opt.observer) opt.observer->on_safe_region(d_ub, region);
    refine();
}

void KatrSearch::State::refine() {
    if (!region_active || !full()) return;
    std::vector<double> any(m), unproc(m);
    bool has_unproc = false;
    for (std::size_t t = 0; t < m; ++t) {
        auto posting = ix.pois.postings(q.keywords[t]);
        auto& a = cur_any[t];
        while (a < posting.size() && !admissible(posting[a])) ++a;
        if (a == posting.size()) {
            d_ub = -kInfinity;
            done = true;
            return;
        }
        any[t] = rating(posting[a]);
        auto& u = cur_unproc[t];
        while (u < posting.size() &&
               (!admissible(posting[u]) || (poi_state[static_cast<std::size_t>(posting[u])] & kProcessed)))
            ++u;
        unproc[t] = u < posting.size() ? rating(posting[u]) : -kInfinity;
        has_unproc = has_unproc || u < posting.size();
    }
    double next;
    if (!has_unproc) {
        next = -kInfinity;
    } else {
        const double sum = std::accumulate(any.begin(), any.end(), 0.0);
        double tau = -kInfinity;
        for (std::size_t t = 0; t < m; ++t)
            if (unproc[t] > -kInfinity) tau = std::max(tau, sum - any[t] + unproc[t]);
        next = radius(tau);
    }
    if (!(next < d_ub)) return;
    d_ub = next;
    for (std::size_t i = 0; i < region.size(); ++i)
        if (region[i] && !(nearest[i] <= distance_slack(d_ub))) region[i] = 0;
    if (opt.observer) opt.observer->on_d_ub(d_ub);
}

void KatrSearch::State::seed_until_full() {
    flush_pending();
    while (!full() && !done) {
        step();
        if (topk.size() + pending.size() >= q.k) flush_pending();
    }
    flush_pending();
}

QueryResult KatrSearch::State::result() {
    flush_pending();
    c.distance_computations = router.searches();
    if (!est_d_ub) {
        c.sg_sr = c.sg_rn;
        c.cps_sr = c.cps_rn;
        c.cps_bp = c.cps_emitted;
    } else {
        for (const auto& set : seeds)
            if (std::all_of(set.begin(), set.end(), [this](PoiId p) { return in_est_region(p); })) ++c.cps_bp;
        seeds.clear();
    }
    c.sg_bp = 0;
    for (std::size_t i = 0; i < sg_processed.size(); ++i) {
        const bool in_sr = !est_d_ub || est_region[i];
        if (sg.relevant(static_cast<SubgraphId>(i)) && in_sr && !sg_pruned[i] && sg_processed[i]) ++c.sg_bp;
    }
    QueryResult r;
    r.routes = topk;
    if (opt.expand_paths)
        for (auto& route : r.routes) route.path = router.route_path(route.pivots);
    r.counters = c;
    r.partial = topk.size() < q.k;
    r.timed_out = timed_out;
    r.infeasible_budget = q.distance_budget.has_value() && topk.empty();
    r.established_d_ub = est_d_ub;
    r.final_d_ub = d_ub;
    return r;
}

KatrSearch::KatrSearch(const KatrIndex& ix, Query q, EngineOptions options) {
    validate_query(ix, q);
    s_ = std::make_unique<State>(ix, std::move(q), options);
    s_->init();
}

KatrSearch::~KatrSearch() = default;

std::vector<std::vector<PoiId>> KatrSearch::di_exploration() {
    while (!s_->done && s_->pending.size() + s_->topk.size() < s_->q.k) s_->step();
    return s_->pending;
}

void KatrSearch::establish_safe_region() {
    s_->seed_until_full();
    s_->establish();
}

void KatrSearch::explore() {
    if (!s_->established) establish_safe_region();
    while (!s_->done) s_->step();
}

QueryResult KatrSearch::finish() { return s_->result(); }

QueryResult KatrSearch::run() {
    di_exploration();
    establish_safe_region();
    explore();
    return finish();
}

const SearchGraph& KatrSearch::search_graph() const { return s_->sg; }
const std::vector<VertexId>& KatrSearch::settle_order() const { return s_->order; }
double KatrSearch::d_ub() const { return s_->d_ub; }
double KatrSearch::sc_min() const { return s_->sc_min(); }
const std::vector<double>& KatrSearch::establishment_taus() const { return s_->taus; }
const std::vector<char>& KatrSearch::region() const { return s_->region; }

QueryResult katr_query(const KatrIndex& ix, const Query& q, const EngineOptions& options) {
    KatrSearch search(ix, q, options);
    return search.run();
}

double seed_diameter(double z, std::size_t m, std::size_t k, double n_p) {
    return 2.0 * std::sqrt(static_cast<double>(k) * z / (std::pow(n_p, static_cast<double>(m)) * std::numbers::pi));
}

double estimate_search_fraction(double z, std::size_t m, std::size_t k, double n_p, double alpha, double tau_h,
                                double tau_l) {
    if (!(z > 0 && m > 0 && n_p > 0 && alpha > 0 && tau_h >= tau_l))
        throw Error(ErrorCode::invalid_input, "estimator inputs must be positive");
    const double s = seed_diameter(z, m, k, n_p);
    // SC_min = -a·S + (1-a)·m·tau_l and tau_u = m·tau_h give
    // D_ub = (1-a)·m·(tau_h - tau_l)/a + S.
    const double d_ub = (1.0 - alpha) * static_cast<double>(m) * (tau_h - tau_l) / alpha + s;
    return std::numbers::pi * d_ub * d_ub / z;
}

}  // namespace katr
