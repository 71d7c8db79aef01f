#pragma once

#include <chrono>
#include <memory>
#include <optional>
#include <string>

#include "json.hpp"
#include "katr/engine.hpp"
#include "katr/index.hpp"

namespace katr {

inline constexpr int kSchemaVersion = 1;

struct ServiceOptions {
    std::chrono::milliseconds timeout{10000};
    bool expand_paths = true;
};

struct ServiceResponse {
    int status = 200;
    nlohmann::json body;
};

/// The two tool functions (tag catalog and route search) over one shared,
/// read-only index. All handlers are safe to call concurrently.
class KatrService {
public:
    explicit KatrService(std::shared_ptr<const KatrIndex> index, ServiceOptions options = {});

    bool ready() const { return index_ != nullptr; }
    const ServiceOptions& options() const { return options_; }

    ServiceResponse health() const;
    ServiceResponse poi_tags() const;
    ServiceResponse search(const std::string& body) const;
    ServiceResponse search(const nlohmann::json& request) const;

    /// Line protocol: {"tool": "poi_tags" | "katr_search" | "health",
    /// "arguments": {...}, "id": any}. Returns one JSON line.
    std::string handle_line(const std::string& line) const;

private:
    std::shared_ptr<const KatrIndex> index_;
    ServiceOptions options_;
};

/// Validates a search request against the index and fills q. Returns the
/// error response for an invalid request.
std::optional<ServiceResponse> build_query(const KatrIndex& ix, const nlohmann::json& request, Query& q);
/// One route with distances and ratings in input units.
nlohmann::json route_to_json(const KatrIndex& ix, const CpRoute& route, std::size_t rank);
nlohmann::json error_body(const std::string& code, const std::string& message);

/// Up to `limit` known tags closest to `tag` by edit distance.
std::vector<std::string> nearest_tags(const std::vector<std::string>& known, const std::string& tag,
                                      std::size_t limit = 3);
std::size_t edit_distance(const std::string& a, const std::string& b);

/// Settings read from KATR_BIND (host:port), KATR_INDEX (network dir) and
/// KATR_TIMEOUT_MS.
struct ServiceEnvironment {
    std::string host = "127.0.0.1";
    int port = 8080;
    std::optional<std::string> index_dir;
    std::chrono::milliseconds timeout{10000};
};
ServiceEnvironment service_environment();
/// Parses "host:port", ":port" or "port".
void parse_bind(const std::string& bind, std::string& host, int& port);

/// HTTP front end: POST /katr/search, GET /poi/tags, GET /health.
class HttpServer {
public:
    explicit HttpServer(const KatrService& service);
    ~HttpServer();
    HttpServer(const HttpServer&) = delete;
    HttpServer& operator=(const HttpServer&) = delete;

    /// Binds; port 0 picks a free port. Returns the bound port.
    int bind(const std::string& host, int port);
    /// Blocks until stop().
    void listen();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace katr
