// katr: command-line front end for generation, indexing, queries,
// benchmarks and the tool service.

#include <csignal>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "katr/bench.hpp"
#include "katr/oracle.hpp"
#include "katr/service.hpp"
#include "katr/synthetic.hpp"

using namespace katr;
using nlohmann::json;

namespace {

Config g_config;

// Flag value when given on the command line, else the config entry, else
// the built-in default already held by `value`.
template <class T>
void resolve(CLI::Option* opt, const std::string& key, T& value) {
    if (opt->count() > 0 || !g_config.has(key)) return;
    if constexpr (std::is_same_v<T, std::string>) value = g_config.get(key, value);
    else if constexpr (std::is_same_v<T, bool>) value = g_config.get(key, value);
    else if constexpr (std::is_floating_point_v<T>) value = g_config.get(key, static_cast<double>(value));
    else value = static_cast<T>(g_config.get(key, static_cast<std::size_t>(value)));
}

struct QueryFlags {
    std::string network;
    std::size_t partition_size = kDefaultPartitionSize;
    std::int64_t source = 0;
    std::string keywords;
    std::size_t k = 1;
    double alpha = 0.5;
    bool fixed_order = false;
    std::optional<double> budget;
    std::optional<std::int64_t> destination;
    bool identical_ratings = false;
    std::map<std::string, CLI::Option*> opts;

    void add(CLI::App* app) {
        opts["network"] = app->add_option("--network", network, "network directory");
        opts["partition_size"] = app->add_option("--partition-size", partition_size, "max subgraph size");
        app->add_option("--source", source, "query vertex (input id)")->required();
        app->add_option("--keywords", keywords, "comma-separated tags or keyword ids")->required();
        opts["k"] = app->add_option("--k", k, "number of routes");
        opts["alpha"] = app->add_option("--alpha", alpha, "distance weight in [0,1]");
        app->add_flag("--fixed-order", fixed_order, "visit POIs in keyword order");
        app->add_option("--budget", budget, "distance budget in input units");
        app->add_option("--destination", destination, "final vertex (input id)");
        app->add_flag("--identical-ratings", identical_ratings, "treat every POI rating as equal");
    }

    void apply_config() {
        resolve(opts["network"], "network", network);
        resolve(opts["partition_size"], "partition_size", partition_size);
        resolve(opts["k"], "k", k);
        resolve(opts["alpha"], "alpha", alpha);
        if (network.empty()) throw Error(ErrorCode::invalid_input, "--network is required");
    }

    json request() const {
        json r{{"source", source}, {"k", k}, {"alpha", alpha}, {"fixed_order", fixed_order},
               {"identical_ratings", identical_ratings}};
        json kw = json::array();
        std::stringstream ss(keywords);
        std::string item;
        while (std::getline(ss, item, ',')) {
            if (item.empty()) continue;
            const bool numeric = item.find_first_not_of("0123456789") == std::string::npos;
            if (numeric) kw.push_back(std::stoll(item));
            else kw.push_back(item);
        }
        r["keywords"] = kw;
        if (budget) r["budget"] = *budget;
        if (destination) r["destination"] = *destination;
        return r;
    }
};

KatrIndex load(const std::string& dir, std::size_t partition_size) {
    bool rebuilt = false;
    auto ix = load_index_dir(dir, partition_size, &rebuilt);
    if (rebuilt) std::cerr << "built partition index " << (std::filesystem::path(dir) / kPartitionFileName) << "\n";
    return ix;
}

json ingest_json(const IngestReport& r) {
    return json{{"raw_vertices", r.raw_vertices},     {"raw_edges", r.raw_edges},
                {"raw_pois", r.raw_pois},             {"components", r.components},
                {"dropped_vertices", r.dropped_vertices}, {"dropped_edges", r.dropped_edges},
                {"dropped_pois", r.dropped_pois},     {"duplicate_edges", r.duplicate_edges}};
}

json partition_json(const PartitionIndex& pi) {
    std::size_t borders = 0, largest = 0;
    for (const auto& sg : pi.subgraphs()) {
        borders += sg.borders.size();
        largest = std::max(largest, sg.size());
    }
    return json{{"subgraphs", pi.subgraph_count()},
                {"max_subgraph_size", pi.max_subgraph_size()},
                {"largest_subgraph", largest},
                {"border_vertices", borders},
                {"external_edges", pi.external_edges().size()}};
}

// Keeps the raw records that survive normalization, in input units.
RawNetwork cleaned(const RawNetwork& raw, const RoadNetwork& net) {
    RawNetwork out;
    out.tags = raw.tags;
    for (const auto& v : raw.vertices)
        if (net.internal_id(v.id)) out.vertices.push_back(v);
    std::set<std::pair<std::int64_t, std::int64_t>> seen;
    std::map<std::pair<std::int64_t, std::int64_t>, double> best;
    for (const auto& e : raw.edges) {
        if (!net.internal_id(e.u) || !net.internal_id(e.v)) continue;
        auto key = std::minmax(e.u, e.v);
        auto [it, fresh] = best.emplace(key, e.weight);
        if (!fresh) it->second = std::min(it->second, e.weight);
    }
    for (const auto& e : raw.edges) {
        auto key = std::minmax(e.u, e.v);
        auto it = best.find(key);
        if (it == best.end() || !seen.insert(key).second) continue;
        out.edges.push_back(RawEdge{e.u, e.v, it->second});
    }
    for (const auto& p : raw.pois)
        if (net.internal_id(p.vertex)) out.pois.push_back(p);
    return out;
}

HttpServer* g_server = nullptr;

void on_signal(int) {
    if (g_server) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Keyword-aware top-k route queries over road networks"};
    app.require_subcommand(1);
    std::string config_file;
    app.add_option("--config", config_file, "key = value defaults file")->check(CLI::ExistingFile);

    // generate
    auto* gen = app.add_subcommand("generate", "write a synthetic network directory");
    SyntheticParams sp;
    std::string gen_out, gen_ratings = "stars";
    std::map<std::string, CLI::Option*> gen_opts;
    gen->add_option("--out", gen_out, "output directory")->required();
    gen_opts["seed"] = gen->add_option("--seed", sp.seed);
    gen_opts["vertices"] = gen->add_option("--vertices", sp.vertices);
    gen_opts["avg_degree"] = gen->add_option("--avg-degree", sp.avg_degree);
    gen_opts["keywords"] = gen->add_option("--keywords", sp.keywords);
    gen_opts["pois_per_keyword"] = gen->add_option("--pois-per-keyword", sp.pois_per_keyword);
    gen_opts["ratings"] = gen->add_option("--ratings", gen_ratings, "uniform | stars");
    gen_opts["integer_weight_scale"] =
        gen->add_option("--integer-weights", sp.integer_weight_scale, "round weights up on this scale");

    // ingest
    auto* ing = app.add_subcommand("ingest", "validate raw files and write a cleaned network directory");
    std::string ing_vertices, ing_edges, ing_pois, ing_tags, ing_out;
    ing->add_option("--vertices", ing_vertices)->required()->check(CLI::ExistingFile);
    ing->add_option("--edges", ing_edges)->required()->check(CLI::ExistingFile);
    ing->add_option("--pois", ing_pois)->required()->check(CLI::ExistingFile);
    ing->add_option("--tags", ing_tags)->check(CLI::ExistingFile);
    ing->add_option("--out", ing_out, "output directory")->required();

    // partition / index
    auto* part = app.add_subcommand("partition", "partition a network and report subgraph statistics");
    auto* idx = app.add_subcommand("index", "build and cache the partition index with distance tables");
    std::string pi_network, pi_out;
    std::size_t pi_size = kDefaultPartitionSize;
    for (auto* sub : {part, idx}) {
        sub->add_option("--network", pi_network, "network directory");
        sub->add_option("--partition-size", pi_size, "max subgraph size");
        sub->add_option("--out", pi_out, "index file (default <network>/partition.katr)");
    }

    // query / oracle
    auto* qry = app.add_subcommand("query", "run one query and print routes as JSON");
    QueryFlags qf;
    qf.add(qry);
    bool q_no_paths = false;
    std::string q_variant = "full";
    qry->add_flag("--no-paths", q_no_paths, "skip vertex path expansion");
    qry->add_option("--variant", q_variant, "full | nosr | nosg | noed");
    auto* orc = app.add_subcommand("oracle", "brute-force top-k for one query");
    QueryFlags of;
    of.add(orc);
    double o_limit = 1e7;
    orc->add_option("--limit", o_limit, "enumeration guard (CP-Sets x visit orders)");

    // bench
    auto* bench = app.add_subcommand("bench", "run a query workload across engine variants");
    std::string b_network, b_out, b_m = "3", b_k = "4", b_alpha = "0.5", b_variants = "full,nosr,nosg,noed";
    std::size_t b_queries = 100, b_size = kDefaultPartitionSize, b_threads = 0;
    std::uint64_t b_seed = 7;
    bool b_no_timing = false;
    std::map<std::string, CLI::Option*> b_opts;
    b_opts["network"] = bench->add_option("--network", b_network, "network directory");
    b_opts["partition_size"] = bench->add_option("--partition-size", b_size, "max subgraph size");
    b_opts["queries"] = bench->add_option("--queries", b_queries, "queries per parameter combination");
    b_opts["seed"] = bench->add_option("--seed", b_seed, "workload seed");
    b_opts["m"] = bench->add_option("--m", b_m, "keyword counts, e.g. 2..5");
    b_opts["k"] = bench->add_option("--k", b_k, "result counts, e.g. 1,4,8");
    b_opts["alpha"] = bench->add_option("--alpha", b_alpha, "alpha values, e.g. 0.1,0.5,0.9");
    b_opts["variants"] = bench->add_option("--variants", b_variants, "full,nosr,nosg,noed,oracle");
    b_opts["threads"] = bench->add_option("--threads", b_threads, "worker threads (0: all cores)");
    bench->add_option("--out", b_out, "CSV file (default stdout)");
    bench->add_flag("--no-timing", b_no_timing, "omit the wall_ms column");

    // report
    auto* rep = app.add_subcommand("report", "aggregate a bench CSV");
    std::string r_csv;
    EstimatorInputs est;
    bool r_estimate = false;
    rep->add_option("--csv", r_csv, "bench CSV")->required()->check(CLI::ExistingFile);
    std::string r_network;
    rep->add_flag("--estimate", r_estimate, "add the search-scope estimate column");
    rep->add_option("--network", r_network, "take estimate inputs from this network");
    rep->add_option("--area", est.area, "network area for the estimate");
    rep->add_option("--pois-per-keyword", est.pois_per_keyword);
    rep->add_option("--tau-high", est.tau_high, "highest normalized rating");
    rep->add_option("--tau-low", est.tau_low, "lowest normalized rating");

    // serve
    auto* srv = app.add_subcommand("serve", "HTTP or stdio tool service");
    std::string s_network, s_bind;
    std::size_t s_size = kDefaultPartitionSize;
    std::int64_t s_timeout = -1;
    bool s_stdio = false;
    std::map<std::string, CLI::Option*> s_opts;
    s_opts["network"] = srv->add_option("--network", s_network, "network directory (else KATR_INDEX)");
    s_opts["partition_size"] = srv->add_option("--partition-size", s_size, "max subgraph size");
    s_opts["bind"] = srv->add_option("--bind", s_bind, "host:port (else KATR_BIND, default 127.0.0.1:8080)");
    s_opts["timeout_ms"] = srv->add_option("--timeout-ms", s_timeout, "per-request limit (else KATR_TIMEOUT_MS)");
    srv->add_flag("--stdio", s_stdio, "line-delimited JSON on stdin/stdout");

    CLI11_PARSE(app, argc, argv);

    try {
        if (!config_file.empty()) g_config = Config::load(config_file);

        if (gen->parsed()) {
            resolve(gen_opts["seed"], "seed", sp.seed);
            resolve(gen_opts["vertices"], "vertices", sp.vertices);
            resolve(gen_opts["avg_degree"], "avg_degree", sp.avg_degree);
            resolve(gen_opts["keywords"], "keywords", sp.keywords);
            resolve(gen_opts["pois_per_keyword"], "pois_per_keyword", sp.pois_per_keyword);
            resolve(gen_opts["ratings"], "ratings", gen_ratings);
            resolve(gen_opts["integer_weight_scale"], "integer_weight_scale", sp.integer_weight_scale);
            sp.ratings = parse_rating_distribution(gen_ratings);
            const auto raw = generate_synthetic(sp);
            write_raw_network_dir(raw, gen_out);
            const auto net = normalize(raw);
            std::cout << json{{"out", gen_out}, {"ingest", ingest_json(net.ingest_report())}}.dump(2) << "\n";
        } else if (ing->parsed()) {
            std::optional<std::filesystem::path> tags;
            if (!ing_tags.empty()) tags = ing_tags;
            const auto raw = read_raw_network(ing_vertices, ing_edges, ing_pois, tags);
            const auto net = normalize(raw);
            write_raw_network_dir(cleaned(raw, net), ing_out);
            std::cout << json{{"out", ing_out},
                              {"weight_scale", net.weight_scale()},
                              {"rating_scale", net.rating_scale()},
                              {"euclid_coefficient", net.euclid_coefficient()},
                              {"ingest", ingest_json(net.ingest_report())}}
                             .dump(2)
                      << "\n";
        } else if (part->parsed() || idx->parsed()) {
            auto* sub = part->parsed() ? part : idx;
            resolve(sub->get_option("--network"), "network", pi_network);
            resolve(sub->get_option("--partition-size"), "partition_size", pi_size);
            if (pi_network.empty()) throw Error(ErrorCode::invalid_input, "--network is required");
            const auto net = normalize(read_raw_network_dir(pi_network));
            const auto file = pi_out.empty() ? std::filesystem::path(pi_network) / kPartitionFileName
                                             : std::filesystem::path(pi_out);
            auto pi = partition(net, pi_size);
            if (idx->parsed()) build_intra_distances(pi, net);
            save_partition(pi, file);
            auto out = partition_json(pi);
            out["file"] = file.string();
            out["distance_tables"] = pi.has_intra_tables();
            std::cout << out.dump(2) << "\n";
        } else if (qry->parsed()) {
            qf.apply_config();
            const auto ix = load(qf.network, qf.partition_size);
            Query q;
            if (auto err = build_query(ix, qf.request(), q)) {
                std::cout << err->body.dump(2) << "\n";
                return 2;
            }
            auto eo = variant_options(parse_variant(q_variant));
            eo.expand_paths = !q_no_paths;
            const auto t0 = std::chrono::steady_clock::now();
            const auto res = katr_query(ix, q, eo);
            const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
            json routes = json::array();
            for (std::size_t i = 0; i < res.routes.size(); ++i) routes.push_back(route_to_json(ix, res.routes[i], i + 1));
            const auto& c = res.counters;
            json out{{"schema_version", kSchemaVersion},
                     {"routes", routes},
                     {"partial", res.partial},
                     {"infeasible_budget", res.infeasible_budget},
                     {"counters",
                      {{"sg_rn", c.sg_rn}, {"sg_sr", c.sg_sr}, {"sg_bp", c.sg_bp}, {"cps_rn", c.cps_rn},
                       {"cps_sr", c.cps_sr}, {"cps_bp", c.cps_bp}, {"cpr_sr", c.cpr_sr}, {"cpr_edrs", c.cpr_edrs},
                       {"visited", c.visited}, {"distance_computations", c.distance_computations}}},
                     {"timing", {{"elapsed_ms", ms}}}};
            if (res.established_d_ub) out["safe_region_radius"] = *res.established_d_ub * ix.net.weight_scale();
            std::cout << out.dump(2) << "\n";
        } else if (orc->parsed()) {
            of.apply_config();
            const auto ix = load(of.network, of.partition_size);
            Query q;
            if (auto err = build_query(ix, of.request(), q)) {
                std::cout << err->body.dump(2) << "\n";
                return 2;
            }
            OracleOptions oo;
            oo.max_enumeration = o_limit;
            const auto res = oracle_topk(ix.net, q, oo);
            json routes = json::array();
            for (std::size_t i = 0; i < res.routes.size(); ++i) routes.push_back(route_to_json(ix, res.routes[i], i + 1));
            std::cout << json{{"schema_version", kSchemaVersion},
                              {"routes", routes},
                              {"partial", res.partial},
                              {"infeasible_budget", res.infeasible_budget},
                              {"cp_sets", res.cp_sets},
                              {"permutations", res.permutations}}
                             .dump(2)
                      << "\n";
        } else if (bench->parsed()) {
            resolve(b_opts["network"], "network", b_network);
            resolve(b_opts["partition_size"], "partition_size", b_size);
            resolve(b_opts["queries"], "queries", b_queries);
            resolve(b_opts["seed"], "seed", b_seed);
            resolve(b_opts["m"], "m", b_m);
            resolve(b_opts["k"], "k", b_k);
            resolve(b_opts["alpha"], "alpha", b_alpha);
            resolve(b_opts["variants"], "variants", b_variants);
            resolve(b_opts["threads"], "threads", b_threads);
            if (b_network.empty()) throw Error(ErrorCode::invalid_input, "--network is required");
            const auto ix = load(b_network, b_size);
            WorkloadParams wp;
            wp.seed = b_seed;
            wp.queries = b_queries;
            wp.m_values.clear();
            wp.k_values.clear();
            for (auto v : parse_number_list(b_m)) wp.m_values.push_back(static_cast<std::size_t>(v));
            for (auto v : parse_number_list(b_k)) wp.k_values.push_back(static_cast<std::size_t>(v));
            wp.alpha_values = parse_number_list(b_alpha);
            BenchOptions bo;
            bo.threads = static_cast<unsigned>(b_threads);
            bo.variants.clear();
            std::stringstream ss(b_variants);
            for (std::string v; std::getline(ss, v, ',');)
                if (!v.empty()) bo.variants.push_back(parse_variant(v));
            const auto records = run_bench(ix, generate_workload(ix, wp), bo);
            if (b_out.empty()) {
                write_csv(std::cout, records, !b_no_timing);
            } else {
                std::ofstream f(b_out);
                if (!f) throw Error(ErrorCode::io, "cannot write " + b_out);
                write_csv(f, records, !b_no_timing);
            }
            const auto bad = variant_mismatches(records);
            if (!bad.empty()) {
                std::cerr << bad.size() << " queries where variants disagree, first id " << bad.front() << "\n";
                return 1;
            }
        } else if (rep->parsed()) {
            std::ifstream f(r_csv);
            const auto records = read_csv(f);
            std::optional<EstimatorInputs> e;
            if (r_estimate) e = r_network.empty() ? est : estimator_inputs(normalize(read_raw_network_dir(r_network)));
            write_report(std::cout, summarize(records, e));
        } else if (srv->parsed()) {
            auto env = service_environment();
            resolve(s_opts["network"], "network", s_network);
            resolve(s_opts["partition_size"], "partition_size", s_size);
            resolve(s_opts["bind"], "bind", s_bind);
            resolve(s_opts["timeout_ms"], "timeout_ms", s_timeout);
            if (!s_network.empty()) env.index_dir = s_network;
            if (!s_bind.empty()) parse_bind(s_bind, env.host, env.port);
            if (s_timeout >= 0) env.timeout = std::chrono::milliseconds(s_timeout);

            std::shared_ptr<const KatrIndex> ix;
            if (env.index_dir) ix = std::make_shared<const KatrIndex>(load(*env.index_dir, s_size));
            else std::cerr << "no index configured; search requests will return 503\n";
            KatrService service(ix, ServiceOptions{env.timeout, true});
            if (s_stdio) {
                for (std::string line; std::getline(std::cin, line);) {
                    if (line.empty()) continue;
                    std::cout << service.handle_line(line) << std::endl;
                }
                return 0;
            }
            HttpServer server(service);
            const int port = server.bind(env.host, env.port);
            g_server = &server;
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            std::cerr << "listening on " << env.host << ":" << port << "\n";
            server.listen();
            g_server = nullptr;
        }
    } catch (const Error& e) {
        std::cerr << "error (" << to_string(e.code()) << "): " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
