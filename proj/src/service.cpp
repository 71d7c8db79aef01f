#include "katr/service.hpp"

#include <algorithm>
#include <cstdlib>
#include <set>

#include "httplib.h"
#include "katr/engine.hpp"

namespace katr {

using nlohmann::json;

namespace {

ServiceResponse fail(int status, const std::string& code, const std::string& message) {
    return {status, error_body(code, message)};
}

ServiceResponse unavailable() { return fail(503, "index_unavailable", "no index is loaded"); }

json counters_json(const PruneCounters& c) {
    return json{
        {"sg", {{"rn", c.sg_rn}, {"sr", c.sg_sr}, {"bp", c.sg_bp}}},
        {"cps", {{"rn", c.cps_rn}, {"sr", c.cps_sr}, {"bp", c.cps_bp}}},
        {"cpr", {{"sr", c.cpr_sr}, {"edrs", c.cpr_edrs}}},
        {"visited", c.visited},
        {"distance_computations", c.distance_computations},
    };
}

std::vector<std::string> catalog_tags(const KatrIndex& ix) {
    std::vector<std::string> tags;
    for (const auto& info : ix.pois.catalog()) tags.push_back(info.tag);
    return tags;
}

bool tag_without_pois(const KatrIndex& ix, const std::string& tag, KeywordId& id) {
    for (const auto& [k, name] : ix.net.tags())
        if (name == tag) {
            id = k;
            return true;
        }
    return false;
}

bool integral(const json& j) { return j.is_number_integer() || j.is_number_unsigned(); }

}  // namespace

json route_to_json(const KatrIndex& ix, const CpRoute& r, std::size_t rank) {
    const auto& net = ix.net;
    json pois = json::array();
    for (auto p : r.pois) {
        const auto& poi = net.poi(p);
        const auto& v = net.vertex(poi.vertex);
        pois.push_back({{"keyword_id", poi.keyword},
                        {"tag", net.tag(poi.keyword)},
                        {"vertex", net.original_id(poi.vertex)},
                        {"rating", poi.rating * net.rating_scale()},
                        {"lon", v.lon},
                        {"lat", v.lat}});
    }
    json path = json::array();
    json coords = json::array();
    for (auto v : r.path) {
        path.push_back(net.original_id(v));
        coords.push_back({net.vertex(v).lon, net.vertex(v).lat});
    }
    double raw_rating = 0.0;
    for (auto p : r.pois) raw_rating += net.poi(p).rating * net.rating_scale();
    return json{{"rank", rank},
                {"score", r.score},
                {"distance", r.graph_distance * net.weight_scale()},
                {"rating_sum", raw_rating},
                {"pois", std::move(pois)},
                {"path", std::move(path)},
                {"coordinates", std::move(coords)}};
}

json error_body(const std::string& code, const std::string& message) {
    return json{{"schema_version", kSchemaVersion}, {"error", {{"code", code}, {"message", message}}}};
}

std::size_t edit_distance(const std::string& a, const std::string& b) {
    std::vector<std::size_t> row(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        std::size_t diag = row[0];
        row[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const std::size_t up = row[j];
            row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
            diag = up;
        }
    }
    return row[b.size()];
}

std::vector<std::string> nearest_tags(const std::vector<std::string>& known, const std::string& tag,
                                      std::size_t limit) {
    std::vector<std::pair<std::size_t, std::string>> scored;
    for (const auto& k : known) scored.emplace_back(edit_distance(k, tag), k);
    std::sort(scored.begin(), scored.end());
    std::vector<std::string> out;
    for (std::size_t i = 0; i < scored.size() && i < limit; ++i) out.push_back(scored[i].second);
    return out;
}

KatrService::KatrService(std::shared_ptr<const KatrIndex> index, ServiceOptions options)
    : index_(std::move(index)), options_(options) {}

ServiceResponse KatrService::health() const {
    json body{{"schema_version", kSchemaVersion}, {"status", ready() ? "ok" : "no_index"}, {"index_loaded", ready()}};
    if (ready()) {
        body["vertices"] = index_->net.vertex_count();
        body["pois"] = index_->net.poi_count();
        body["subgraphs"] = index_->partition.subgraph_count();
    }
    return {200, std::move(body)};
}

ServiceResponse KatrService::poi_tags() const {
    if (!ready()) return unavailable();
    json tags = json::array();
    for (const auto& info : index_->pois.catalog())
        tags.push_back({{"keyword_id", info.keyword_id}, {"tag", info.tag}, {"count", info.count}});
    return {200, json{{"schema_version", kSchemaVersion}, {"tags", std::move(tags)}}};
}

ServiceResponse KatrService::search(const std::string& body) const {
    if (!ready()) return unavailable();
    json request;
    try {
        request = json::parse(body);
    } catch (const json::parse_error& e) {
        auto out = fail(400, "malformed_json", e.what());
        out.body["error"]["position"] = e.byte;
        return out;
    }
    return search(request);
}

std::optional<ServiceResponse> build_query(const KatrIndex& ix, const json& request, Query& q) {
    const auto& net = ix.net;
    if (!request.is_object()) return fail(400, "invalid_request", "request must be a JSON object");

    static const std::set<std::string> known{"schema_version", "source",   "keywords",        "k",
                                             "alpha",          "fixed_order", "budget",       "destination",
                                             "identical_ratings"};
    for (const auto& [key, value] : request.items())
        if (!known.count(key)) {
            auto out = fail(400, "invalid_request", "unknown field '" + key + "'");
            out.body["error"]["field"] = key;
            return out;
        }
    auto bad_field = [](const std::string& field, const std::string& message) {
        auto out = fail(400, "invalid_request", message);
        out.body["error"]["field"] = field;
        return out;
    };
    if (request.contains("schema_version") &&
        (!integral(request["schema_version"]) || request["schema_version"].get<int>() != kSchemaVersion))
        return bad_field("schema_version", "unsupported schema_version");

    auto vertex = [&](const char* field, VertexId& out) -> std::optional<ServiceResponse> {
        const auto& j = request[field];
        if (!integral(j)) return bad_field(field, std::string(field) + " must be an integer vertex id");
        auto id = net.internal_id(j.get<std::int64_t>());
        if (!id) {
            auto r = fail(422, "unknown_vertex",
                          "vertex " + std::to_string(j.get<std::int64_t>()) + " is not part of the routable network");
            r.body["error"]["vertex"] = j;
            return r;
        }
        out = *id;
        return std::nullopt;
    };

    if (!request.contains("source")) return bad_field("source", "source is required");
    if (auto err = vertex("source", q.source)) return *err;

    if (!request.contains("keywords") || !request["keywords"].is_array() || request["keywords"].empty())
        return bad_field("keywords", "keywords must be a non-empty array of tags or keyword ids");
    for (const auto& kw : request["keywords"]) {
        if (kw.is_string()) {
            const auto tag = kw.get<std::string>();
            if (auto id = ix.pois.find_tag(tag)) {
                q.keywords.push_back(*id);
                continue;
            }
            KeywordId id = 0;
            if (tag_without_pois(ix, tag, id)) {
                auto r = fail(422, "uncoverable_keyword", "no POI carries tag '" + tag + "'");
                r.body["error"]["keyword_id"] = id;
                r.body["error"]["tag"] = tag;
                return r;
            }
            auto r = fail(422, "unknown_tag", "unknown tag '" + tag + "'");
            r.body["error"]["tag"] = tag;
            r.body["error"]["suggestions"] = nearest_tags(catalog_tags(ix), tag);
            return r;
        }
        if (integral(kw)) {
            const auto id = kw.get<KeywordId>();
            if (!ix.pois.has_keyword(id)) {
                auto r = fail(422, "uncoverable_keyword", "no POI carries keyword " + std::to_string(id));
                r.body["error"]["keyword_id"] = id;
                return r;
            }
            q.keywords.push_back(id);
            continue;
        }
        return bad_field("keywords", "keywords must be tags or keyword ids");
    }

    if (request.contains("k")) {
        if (!integral(request["k"]) || request["k"].get<std::int64_t>() < 1)
            return bad_field("k", "k must be a positive integer");
        q.k = request["k"].get<std::size_t>();
    }
    if (request.contains("alpha")) {
        if (!request["alpha"].is_number()) return bad_field("alpha", "alpha must be a number");
        q.alpha = request["alpha"].get<double>();
    }
    for (const char* flag : {"fixed_order", "identical_ratings"})
        if (request.contains(flag) && !request[flag].is_boolean())
            return bad_field(flag, std::string(flag) + " must be a boolean");
    q.fixed_order = request.value("fixed_order", false);
    q.identical_ratings = request.value("identical_ratings", false);
    if (request.contains("budget") && !request["budget"].is_null()) {
        if (!request["budget"].is_number()) return bad_field("budget", "budget must be a number");
        q.distance_budget = request["budget"].get<double>() / net.weight_scale();
    }
    if (request.contains("destination") && !request["destination"].is_null()) {
        VertexId d = 0;
        if (auto err = vertex("destination", d)) return *err;
        q.destination = d;
    }

    return std::nullopt;
}

ServiceResponse KatrService::search(const json& request) const {
    if (!ready()) return unavailable();
    const auto& ix = *index_;
    Query q;
    if (auto err = build_query(ix, request, q)) return *err;

    EngineOptions eo;
    eo.expand_paths = options_.expand_paths;
    const auto t0 = std::chrono::steady_clock::now();
    eo.deadline = t0 + options_.timeout;
    QueryResult res;
    try {
        res = katr_query(ix, q, eo);
    } catch (const Error& e) {
        switch (e.code()) {
            case ErrorCode::uncoverable_keyword: {
                auto r = fail(422, "uncoverable_keyword", e.what());
                r.body["error"]["keyword_id"] = e.subject();
                return r;
            }
            case ErrorCode::unknown_vertex: return fail(422, "unknown_vertex", e.what());
            default: return fail(400, "invalid_request", e.what());
        }
    }
    const double elapsed = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();

    json routes = json::array();
    for (std::size_t i = 0; i < res.routes.size(); ++i) routes.push_back(route_to_json(ix, res.routes[i], i + 1));
    if (res.timed_out) {
        auto r = fail(504, "timeout", "query exceeded the time limit; routes are the best found so far");
        r.body["routes"] = std::move(routes);
        r.body["timing"] = {{"elapsed_ms", elapsed}};
        return r;
    }
    json body{{"schema_version", kSchemaVersion},
              {"routes", std::move(routes)},
              {"partial", res.partial},
              {"infeasible_budget", res.infeasible_budget},
              {"counters", counters_json(res.counters)},
              {"timing", {{"elapsed_ms", elapsed}}}};
    return {200, std::move(body)};
}

std::string KatrService::handle_line(const std::string& line) const {
    json reply;
    json msg;
    try {
        msg = json::parse(line);
    } catch (const json::parse_error& e) {
        auto body = error_body("malformed_json", e.what());
        body["error"]["position"] = e.byte;
        return json{{"status", 400}, {"body", std::move(body)}}.dump();
    }
    if (msg.is_object() && msg.contains("id")) reply["id"] = msg["id"];
    ServiceResponse r;
    const std::string tool = msg.is_object() && msg.contains("tool") && msg["tool"].is_string() ? msg["tool"].get<std::string>() : "";
    if (tool == "poi_tags") r = poi_tags();
    else if (tool == "katr_search") r = search(msg.contains("arguments") ? msg["arguments"] : json::object());
    else if (tool == "health") r = health();
    else r = fail(400, "unknown_tool", "tool must be one of poi_tags, katr_search, health");
    reply["status"] = r.status;
    reply["body"] = std::move(r.body);
    return reply.dump();
}

void parse_bind(const std::string& bind, std::string& host, int& port) {
    const auto colon = bind.rfind(':');
    std::string port_text = bind;
    if (colon != std::string::npos) {
        if (colon > 0) host = bind.substr(0, colon);
        port_text = bind.substr(colon + 1);
    }
    try {
        std::size_t used = 0;
        port = std::stoi(port_text, &used);
        if (used != port_text.size() || port < 0 || port > 65535) throw std::out_of_range(port_text);
    } catch (const std::exception&) {
        throw Error(ErrorCode::invalid_input, "bad bind address '" + bind + "'");
    }
}

ServiceEnvironment service_environment() {
    ServiceEnvironment env;
    if (const char* bind = std::getenv("KATR_BIND")) parse_bind(bind, env.host, env.port);
    if (const char* dir = std::getenv("KATR_INDEX")) env.index_dir = dir;
    if (const char* t = std::getenv("KATR_TIMEOUT_MS")) {
        try {
            env.timeout = std::chrono::milliseconds(std::stoll(t));
        } catch (const std::exception&) {
            throw Error(ErrorCode::invalid_input, std::string("bad KATR_TIMEOUT_MS '") + t + "'");
        }
    }
    return env;
}

struct HttpServer::Impl {
    httplib::Server server;
};

namespace {

void reply(httplib::Response& res, const ServiceResponse& r) {
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
}

}  // namespace

HttpServer::HttpServer(const KatrService& service) : impl_(std::make_unique<Impl>()) {
    auto& s = impl_->server;
    s.Post("/katr/search", [&service](const httplib::Request& req, httplib::Response& res) {
        reply(res, service.search(req.body));
    });
    s.Get("/poi/tags", [&service](const httplib::Request&, httplib::Response& res) { reply(res, service.poi_tags()); });
    s.Get("/health", [&service](const httplib::Request&, httplib::Response& res) { reply(res, service.health()); });
    s.set_error_handler([](const httplib::Request&, httplib::Response& res) {
        if (!res.body.empty()) return;
        res.set_content(error_body(res.status == 404 ? "not_found" : "http_error", httplib::status_message(res.status)).dump(),
                        "application/json");
    });
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
    auto& s = impl_->server;
    const int bound = port == 0 ? s.bind_to_any_port(host) : (s.bind_to_port(host, port) ? port : -1);
    if (bound < 0) throw Error(ErrorCode::io, "cannot bind " + host + ":" + std::to_string(port));
    return bound;
}

void HttpServer::listen() { impl_->server.listen_after_bind(); }

void HttpServer::stop() {
    if (impl_) impl_->server.stop();
}

}  // namespace katr
