#include "katr/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <mutex>
#include <ostream>
#include <random>
#include <sstream>
#include <thread>
#include <tuple>

#include "katr/oracle.hpp"

namespace katr {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) out.push_back(cur);
    if (!s.empty() && s.back() == sep) out.emplace_back();
    return out;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double to_double(const std::string& s, const std::string& what) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw Error(ErrorCode::invalid_input, "bad number for " + what + ": '" + s + "'");
    }
}

}  // namespace

Config Config::load(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw Error(ErrorCode::io, "cannot open config " + file.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

Config Config::parse(const std::string& text) {
    Config c;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw Error(ErrorCode::invalid_input, "config line " + std::to_string(lineno) + ": expected key = value",
                        static_cast<std::int64_t>(lineno));
        c.values_[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return c;
}

std::string Config::get(const std::string& key, const std::string& fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
}

double Config::get(const std::string& key, double fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : to_double(it->second, key);
}

std::size_t Config::get(const std::string& key, std::size_t fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    const double v = to_double(it->second, key);
    if (v < 0 || v != std::floor(v)) throw Error(ErrorCode::invalid_input, key + " must be a non-negative integer");
    return static_cast<std::size_t>(v);
}

bool Config::get(const std::string& key, bool fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    const auto& v = it->second;
    if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
    if (v == "0" || v == "false" || v == "no" || v == "off") return false;
    throw Error(ErrorCode::invalid_input, key + " must be a boolean");
}

std::vector<double> parse_number_list(const std::string& text) {
    std::vector<double> out;
    for (auto item : split(text, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        if (auto dots = item.find(".."); dots != std::string::npos) {
            const double a = to_double(trim(item.substr(0, dots)), "range");
            const double b = to_double(trim(item.substr(dots + 2)), "range");
            if (a != std::floor(a) || b != std::floor(b) || b < a)
                throw Error(ErrorCode::invalid_input, "bad integer range '" + item + "'");
            for (double v = a; v <= b; v += 1.0) out.push_back(v);
        } else {
            out.push_back(to_double(item, "list"));
        }
    }
    if (out.empty()) throw Error(ErrorCode::invalid_input, "empty number list");
    return out;
}

std::vector<BenchQuery> generate_workload(const KatrIndex& ix, const WorkloadParams& params) {
    std::vector<KeywordId> keywords;
    for (const auto& info : ix.pois.catalog()) keywords.push_back(info.keyword_id);
    const auto n = ix.net.vertex_count();
    if (n == 0) throw Error(ErrorCode::empty_graph, "network has no vertices");

    std::mt19937_64 rng(params.seed);
    std::vector<BenchQuery> out;
    for (auto m : params.m_values) {
        if (m < 1 || m > keywords.size())
            throw Error(ErrorCode::invalid_query, "m = " + std::to_string(m) + " exceeds the " +
                                                      std::to_string(keywords.size()) + " keywords with POIs");
        for (auto k : params.k_values) {
            for (auto alpha : params.alpha_values) {
                for (std::size_t i = 0; i < params.queries; ++i) {
                    BenchQuery bq;
                    bq.id = out.size();
                    bq.query.source = static_cast<VertexId>(std::uniform_int_distribution<std::size_t>(0, n - 1)(rng));
                    auto pool = keywords;
                    std::shuffle(pool.begin(), pool.end(), rng);
                    bq.query.keywords.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(m));
                    bq.query.k = k;
                    bq.query.alpha = alpha;
                    out.push_back(std::move(bq));
                }
            }
        }
    }
    return out;
}

Variant parse_variant(const std::string& name) {
    if (name == "full") return Variant::full;
    if (name == "nosr") return Variant::nosr;
    if (name == "nosg") return Variant::nosg;
    if (name == "noed") return Variant::noed;
    if (name == "oracle") return Variant::oracle;
    throw Error(ErrorCode::invalid_input, "unknown variant '" + name + "'");
}

std::string to_string(Variant v) {
    switch (v) {
        case Variant::full: return "full";
        case Variant::nosr: return "nosr";
        case Variant::nosg: return "nosg";
        case Variant::noed: return "noed";
        case Variant::oracle: return "oracle";
    }
    return "?";
}

EngineOptions variant_options(Variant v) {
    EngineOptions o;
    o.expand_paths = false;
    o.safe_region = v != Variant::nosr;
    o.subgraph_pruning = v != Variant::nosg;
    o.edrs_early_stop = v != Variant::noed;
    return o;
}

namespace {

BenchRecord run_one(const KatrIndex& ix, const BenchQuery& bq, Variant v, double oracle_limit) {
    BenchRecord r;
    r.query_id = bq.id;
    r.variant = v;
    r.source = bq.query.source;
    r.keywords = bq.query.keywords;
    r.k = bq.query.k;
    r.alpha = bq.query.alpha;
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<CpRoute> routes;
    if (v == Variant::oracle) {
        OracleOptions oo;
        oo.max_enumeration = oracle_limit;
        oo.expand_paths = false;
        try {
            auto res = oracle_topk(ix.net, bq.query, oo);
            routes = std::move(res.routes);
            r.partial = res.partial;
            r.counters.cps_rn = res.cp_sets;
            r.counters.cps_sr = res.cp_sets;
            r.counters.cps_bp = static_cast<std::size_t>(res.cp_sets);
            r.counters.cpr_sr = static_cast<std::size_t>(res.permutations);
            r.counters.cpr_edrs = static_cast<std::size_t>(res.permutations);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::enumeration_limit) throw;
            r.skipped = true;
        }
    } else {
        auto res = katr_query(ix, bq.query, variant_options(v));
        routes = std::move(res.routes);
        r.partial = res.partial;
        r.counters = res.counters;
    }
    r.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    for (const auto& route : routes) {
        r.scores.push_back(route.score);
        r.distances.push_back(route.graph_distance);
        r.ratings.push_back(route.rating_sum);
    }
    return r;
}

}  // namespace

std::vector<BenchRecord> run_bench(const KatrIndex& ix, const std::vector<BenchQuery>& queries,
                                   const BenchOptions& options) {
    const auto nv = options.variants.size();
    const auto tasks = queries.size() * nv;
    std::vector<BenchRecord> out(tasks);
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (;;) {
            const auto t = next.fetch_add(1);
            if (t >= tasks) return;
            try {
                out[t] = run_one(ix, queries[t / nv], options.variants[t % nv], options.oracle_limit);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next = tasks;
            }
        }
    };
    unsigned threads = options.threads ? options.threads : std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(tasks, 1)));
    std::vector<std::thread> pool;
    for (unsigned i = 1; i < threads; ++i) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
    return out;
}

std::vector<std::size_t> variant_mismatches(const std::vector<BenchRecord>& records, double tolerance) {
    std::map<std::size_t, const BenchRecord*> first;
    std::vector<std::size_t> bad;
    for (const auto& r : records) {
        if (r.skipped) continue;
        auto [it, fresh] = first.emplace(r.query_id, &r);
        if (fresh) continue;
        const auto& a = it->second->scores;
        bool same = a.size() == r.scores.size();
        for (std::size_t i = 0; same && i < a.size(); ++i) same = std::abs(a[i] - r.scores[i]) <= tolerance;
        if (!same && (bad.empty() || bad.back() != r.query_id)) bad.push_back(r.query_id);
    }
    std::sort(bad.begin(), bad.end());
    bad.erase(std::unique(bad.begin(), bad.end()), bad.end());
    return bad;
}

namespace {

const char* const kColumns[] = {
    "query_id",    "variant",     "source",       "keywords",       "k",
    "alpha",       "skipped",     "partial",      "sg_rn",          "sg_sr",
    "sg_bp",       "cps_rn",      "cps_sr",       "cps_bp",         "cps_emitted",
    "cps_eliminated", "cps_over_budget", "cps_evaluated", "cpr_sr", "cpr_edrs",
    "sg_pruned",   "pois_pruned", "visited",      "distance_computations", "safe_region_iterations",
    "scores",      "distances",   "ratings",
};

template <class T, class F>
std::string join(const std::vector<T>& xs, F f) {
    std::string s;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) s += ';';
        s += f(xs[i]);
    }
    return s;
}

std::vector<double> parse_doubles(const std::string& s) {
    std::vector<double> out;
    if (s.empty()) return out;
    for (const auto& item : split(s, ';')) out.push_back(to_double(item, "list"));
    return out;
}

}  // namespace

void write_csv(std::ostream& out, const std::vector<BenchRecord>& records, bool timing) {
    for (std::size_t i = 0; i < std::size(kColumns); ++i) out << (i ? "," : "") << kColumns[i];
    if (timing) out << ",wall_ms";
    out << '\n';
    for (const auto& r : records) {
        const auto& c = r.counters;
        out << r.query_id << ',' << to_string(r.variant) << ',' << r.source << ','
            << join(r.keywords, [](KeywordId k) { return std::to_string(k); }) << ',' << r.k << ',' << fmt(r.alpha)
            << ',' << r.skipped << ',' << r.partial << ',' << c.sg_rn << ',' << c.sg_sr << ',' << c.sg_bp << ','
            << fmt(c.cps_rn) << ',' << fmt(c.cps_sr) << ',' << c.cps_bp << ',' << c.cps_emitted << ','
            << c.cps_eliminated << ',' << c.cps_over_budget << ',' << c.cps_evaluated << ',' << c.cpr_sr << ','
            << c.cpr_edrs << ',' << c.sg_pruned << ',' << c.pois_pruned << ',' << c.visited << ','
            << c.distance_computations << ',' << c.safe_region_iterations << ',' << join(r.scores, fmt) << ','
            << join(r.distances, fmt) << ',' << join(r.ratings, fmt);
        if (timing) out << ',' << fmt(r.wall_ms);
        out << '\n';
    }
}

std::vector<BenchRecord> read_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorCode::invalid_input, "empty CSV");
    const auto header = split(trim(line), ',');
    std::map<std::string, std::size_t> col;
    for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
    for (auto name : kColumns)
        if (!col.count(name)) throw Error(ErrorCode::invalid_input, std::string("CSV lacks column ") + name);
    const bool timing = col.count("wall_ms") != 0;

    std::vector<BenchRecord> out;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        line = trim(line);
        if (line.empty()) continue;
        const auto f = split(line, ',');
        if (f.size() != header.size())
            throw Error(ErrorCode::invalid_input, "CSV line " + std::to_string(lineno) + " has " +
                                                      std::to_string(f.size()) + " fields",
                        static_cast<std::int64_t>(lineno));
        auto at = [&](const char* name) -> const std::string& { return f[col[name]]; };
        auto num = [&](const char* name) { return to_double(at(name), name); };
        auto count = [&](const char* name) { return static_cast<std::size_t>(num(name)); };
        BenchRecord r;
        r.query_id = count("query_id");
        r.variant = parse_variant(at("variant"));
        r.source = static_cast<VertexId>(num("source"));
        for (auto k : parse_doubles(at("keywords"))) r.keywords.push_back(static_cast<KeywordId>(k));
        r.k = count("k");
        r.alpha = num("alpha");
        r.skipped = num("skipped") != 0;
        r.partial = num("partial") != 0;
        auto& c = r.counters;
        c.sg_rn = count("sg_rn");
        c.sg_sr = count("sg_sr");
        c.sg_bp = count("sg_bp");
        c.cps_rn = num("cps_rn");
        c.cps_sr = num("cps_sr");
        c.cps_bp = count("cps_bp");
        c.cps_emitted = count("cps_emitted");
        c.cps_eliminated = count("cps_eliminated");
        c.cps_over_budget = count("cps_over_budget");
        c.cps_evaluated = count("cps_evaluated");
        c.cpr_sr = count("cpr_sr");
        c.cpr_edrs = count("cpr_edrs");
        c.sg_pruned = count("sg_pruned");
        c.pois_pruned = count("pois_pruned");
        c.visited = count("visited");
        c.distance_computations = count("distance_computations");
        c.safe_region_iterations = count("safe_region_iterations");
        r.scores = parse_doubles(at("scores"));
        r.distances = parse_doubles(at("distances"));
        r.ratings = parse_doubles(at("ratings"));
        if (timing) r.wall_ms = num("wall_ms");
        out.push_back(std::move(r));
    }
    return out;
}

namespace {

// Nearest-rank percentile of a sorted sample.
double percentile(const std::vector<double>& sorted, double p) {
    if (sorted.empty()) return 0.0;
    auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * static_cast<double>(sorted.size())));
    rank = std::clamp<std::size_t>(rank, 1, sorted.size());
    return sorted[rank - 1];
}

double ratio(double num, double den) { return den > 0 ? num / den : 0.0; }

ReportRow aggregate(const std::string& variant, std::size_t m, std::size_t k, double alpha,
                    const std::vector<const BenchRecord*>& rs) {
    ReportRow row;
    row.variant = variant;
    row.m = m;
    row.k = k;
    row.alpha = alpha;
    row.records = rs.size();
    std::vector<double> times;
    double sg_rn = 0, sg_sr = 0, sg_bp = 0, cps_rn = 0, cps_sr = 0, cps_bp = 0, cpr_sr = 0, cpr_edrs = 0;
    for (const auto* r : rs) {
        const auto& c = r->counters;
        times.push_back(r->wall_ms);
        row.mean_ms += r->wall_ms;
        row.mean_visited += static_cast<double>(c.visited);
        row.mean_legs += static_cast<double>(c.distance_computations);
        sg_rn += static_cast<double>(c.sg_rn);
        sg_sr += static_cast<double>(c.sg_sr);
        sg_bp += static_cast<double>(c.sg_bp);
        cps_rn += c.cps_rn;
        cps_sr += c.cps_sr;
        cps_bp += static_cast<double>(c.cps_bp);
        cpr_sr += static_cast<double>(c.cpr_sr);
        cpr_edrs += static_cast<double>(c.cpr_edrs);
    }
    const double n = std::max<double>(1.0, static_cast<double>(rs.size()));
    row.mean_ms /= n;
    row.mean_visited /= n;
    row.mean_legs /= n;
    std::sort(times.begin(), times.end());
    row.p50_ms = percentile(times, 50);
    row.p95_ms = percentile(times, 95);
    row.p99_ms = percentile(times, 99);
    row.sg_sr_ratio = ratio(sg_sr, sg_rn);
    row.sg_bp_ratio = ratio(sg_bp, sg_sr);
    row.cps_sr_ratio = ratio(cps_sr, cps_rn);
    row.cps_bp_ratio = ratio(cps_bp, cps_sr);
    row.cpr_skip_ratio = cpr_sr > 0 ? 1.0 - cpr_edrs / cpr_sr : 0.0;
    return row;
}

}  // namespace

EstimatorInputs estimator_inputs(const RoadNetwork& net) {
    if (net.vertex_count() == 0 || net.poi_count() == 0)
        throw Error(ErrorCode::invalid_input, "estimate needs a network with POIs");
    double x0 = kInfinity, x1 = -kInfinity, y0 = kInfinity, y1 = -kInfinity;
    for (const auto& v : net.vertices()) {
        x0 = std::min(x0, v.lon);
        x1 = std::max(x1, v.lon);
        y0 = std::min(y0, v.lat);
        y1 = std::max(y1, v.lat);
    }
    EstimatorInputs e;
    const double c = net.euclid_coefficient();
    e.area = (x1 - x0) * (y1 - y0) * c * c;
    std::map<KeywordId, std::size_t> per_keyword;
    e.tau_high = -kInfinity;
    e.tau_low = kInfinity;
    for (const auto& p : net.pois()) {
        ++per_keyword[p.keyword];
        e.tau_high = std::max(e.tau_high, p.rating);
        e.tau_low = std::min(e.tau_low, p.rating);
    }
    e.pois_per_keyword = static_cast<double>(net.poi_count()) / static_cast<double>(per_keyword.size());
    return e;
}

std::vector<ReportRow> summarize(const std::vector<BenchRecord>& records,
                                 const std::optional<EstimatorInputs>& estimator) {
    if (records.empty()) throw Error(ErrorCode::invalid_input, "no bench records to summarize");
    std::vector<Variant> order;
    std::map<std::tuple<int, std::size_t, std::size_t, double>, std::vector<const BenchRecord*>> groups;
    std::map<int, std::vector<const BenchRecord*>> totals;
    for (const auto& r : records) {
        if (std::find(order.begin(), order.end(), r.variant) == order.end()) order.push_back(r.variant);
        if (r.skipped) continue;
        const int v = static_cast<int>(r.variant);
        groups[{v, r.keywords.size(), r.k, r.alpha}].push_back(&r);
        totals[v].push_back(&r);
    }
    std::vector<ReportRow> rows;
    for (auto v : order) {
        const int vi = static_cast<int>(v);
        for (const auto& [key, rs] : groups) {
            if (std::get<0>(key) != vi) continue;
            auto row = aggregate(to_string(v), std::get<1>(key), std::get<2>(key), std::get<3>(key), rs);
            if (estimator && row.alpha > 0)
                row.estimate = estimate_search_fraction(estimator->area, row.m, row.k, estimator->pois_per_keyword,
                                                        row.alpha, estimator->tau_high, estimator->tau_low);
            rows.push_back(std::move(row));
        }
        if (totals.count(vi)) rows.push_back(aggregate(to_string(v), 0, 0, 0.0, totals[vi]));
    }
    return rows;
}

void write_report(std::ostream& out, const std::vector<ReportRow>& rows) {
    out << "variant,m,k,alpha,records,mean_ms,p50_ms,p95_ms,p99_ms,mean_visited,mean_legs,"
           "sg_sr_over_rn,sg_bp_over_sr,cps_sr_over_rn,cps_bp_over_sr,cpr_skipped,estimate\n";
    char buf[512];
    for (const auto& r : rows) {
        const std::string group = r.m == 0 ? "all,all,all" : std::to_string(r.m) + "," + std::to_string(r.k) + "," + fmt(r.alpha);
        std::snprintf(buf, sizeof buf, "%s,%s,%zu,%.3f,%.3f,%.3f,%.3f,%.1f,%.1f,%.4f,%.4f,%.4f,%.4f,%.4f,", r.variant.c_str(),
                      group.c_str(), r.records, r.mean_ms, r.p50_ms, r.p95_ms, r.p99_ms, r.mean_visited, r.mean_legs,
                      r.sg_sr_ratio, r.sg_bp_ratio, r.cps_sr_ratio, r.cps_bp_ratio, r.cpr_skip_ratio);
        out << buf;
        if (r.estimate) {
            std::snprintf(buf, sizeof buf, "%.6f", *r.estimate);
            out << buf;
        }
        out << '\n';
    }
}

}  // namespace katr
