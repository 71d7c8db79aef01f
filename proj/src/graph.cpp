#include "katr/graph.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <queue>
#include <sstream>

namespace katr {

const char* to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::invalid_input: return "invalid_input";
    case ErrorCode::empty_graph: return "empty_graph";
    case ErrorCode::non_positive_weight: return "non_positive_weight";
    case ErrorCode::unknown_vertex: return "unknown_vertex";
    case ErrorCode::invalid_partition_size: return "invalid_partition_size";
    case ErrorCode::unknown_subgraph: return "unknown_subgraph";
    case ErrorCode::uncoverable_keyword: return "uncoverable_keyword";
    case ErrorCode::invalid_query: return "invalid_query";
    case ErrorCode::enumeration_limit: return "enumeration_limit";
    case ErrorCode::index_mismatch: return "index_mismatch";
    case ErrorCode::timeout: return "timeout";
    case ErrorCode::io: return "io";
    }
    return "unknown";
}

std::optional<VertexId> RoadNetwork::internal_id(std::int64_t original) const {
    auto it = by_original_.find(original);
    if (it == by_original_.end()) return std::nullopt;
    return it->second;
}

std::string RoadNetwork::tag(KeywordId k) const {
    auto it = tags_.find(k);
    if (it != tags_.end()) return it->second;
    return "kw" + std::to_string(k);
}

namespace {

void fnv_mix(std::uint64_t& h, std::uint64_t value) {
    for (int i = 0; i < 8; ++i) {
        h ^= (value >> (8 * i)) & 0xffu;
        h *= 0x100000001b3ull;
    }
}

}  // namespace

std::uint64_t RoadNetwork::fingerprint() const {
    std::uint64_t h = 0xcbf29ce484222325ull;
    fnv_mix(h, vertices_.size());
    for (const auto& v : vertices_) {
        fnv_mix(h, std::bit_cast<std::uint64_t>(v.lon));
        fnv_mix(h, std::bit_cast<std::uint64_t>(v.lat));
    }
    fnv_mix(h, edges_.size());
    for (const auto& e : edges_) {
        fnv_mix(h, static_cast<std::uint64_t>(e.u));
        fnv_mix(h, static_cast<std::uint64_t>(e.v));
        fnv_mix(h, std::bit_cast<std::uint64_t>(e.weight));
    }
    fnv_mix(h, pois_.size());
    for (const auto& p : pois_) {
        fnv_mix(h, static_cast<std::uint64_t>(p.vertex));
        fnv_mix(h, static_cast<std::uint64_t>(p.keyword));
        fnv_mix(h, std::bit_cast<std::uint64_t>(p.rating));
    }
    return h;
}

void RoadNetwork::build_adjacency() {
    const std::size_t n = vertices_.size();
    std::vector<std::size_t> degree(n, 0);
    for (const auto& e : edges_) {
        ++degree[static_cast<std::size_t>(e.u)];
        ++degree[static_cast<std::size_t>(e.v)];
    }
    offsets_.assign(n + 1, 0);
    for (std::size_t i = 0; i < n; ++i) offsets_[i + 1] = offsets_[i] + degree[i];
    arcs_.assign(offsets_[n], Arc{});
    std::vector<std::size_t> cursor(offsets_.begin(), offsets_.end() - 1);
    for (const auto& e : edges_) {
        arcs_[cursor[static_cast<std::size_t>(e.u)]++] = Arc{e.v, e.weight};
        arcs_[cursor[static_cast<std::size_t>(e.v)]++] = Arc{e.u, e.weight};
    }
    for (std::size_t i = 0; i < n; ++i) {
        std::sort(arcs_.begin() + static_cast<std::ptrdiff_t>(offsets_[i]),
                  arcs_.begin() + static_cast<std::ptrdiff_t>(offsets_[i + 1]),
                  [](const Arc& a, const Arc& b) { return a.to < b.to; });
    }

    poi_offsets_.assign(n + 1, 0);
    for (const auto& p : pois_) ++poi_offsets_[static_cast<std::size_t>(p.vertex) + 1];
    for (std::size_t i = 0; i < n; ++i) poi_offsets_[i + 1] += poi_offsets_[i];
    poi_by_vertex_.assign(pois_.size(), 0);
    std::vector<std::size_t> pc(poi_offsets_.begin(), poi_offsets_.end() - 1);
    for (const auto& p : pois_) poi_by_vertex_[pc[static_cast<std::size_t>(p.vertex)]++] = p.id;
}

RoadNetwork normalize(const RawNetwork& raw, const NormalizeOptions& options) {
    if (raw.vertices.empty()) throw Error(ErrorCode::empty_graph, "network has no vertices");

    IngestReport report;
    report.raw_vertices = raw.vertices.size();
    report.raw_edges = raw.edges.size();
    report.raw_pois = raw.pois.size();

    std::unordered_map<std::int64_t, std::size_t> index;
    index.reserve(raw.vertices.size() * 2);
    for (std::size_t i = 0; i < raw.vertices.size(); ++i) {
        const auto& v = raw.vertices[i];
        if (!std::isfinite(v.lon) || !std::isfinite(v.lat))
            throw Error(ErrorCode::invalid_input, "vertex " + std::to_string(v.id) + " has non-finite coordinates",
                        v.id);
        if (!index.emplace(v.id, i).second)
            throw Error(ErrorCode::invalid_input, "duplicate vertex id " + std::to_string(v.id), v.id);
    }

    // Deduplicated undirected edges keyed by (min, max) raw index.
    std::map<std::pair<std::size_t, std::size_t>, double> edge_weight;
    for (std::size_t i = 0; i < raw.edges.size(); ++i) {
        const auto& e = raw.edges[i];
        auto iu = index.find(e.u);
        auto iv = index.find(e.v);
        if (iu == index.end() || iv == index.end())
            throw Error(ErrorCode::unknown_vertex, "edge " + std::to_string(i) + " references an unknown vertex",
                        static_cast<std::int64_t>(i));
        if (!(e.weight > 0.0) || !std::isfinite(e.weight))
            throw Error(ErrorCode::non_positive_weight,
                        "edge " + std::to_string(i) + " has non-positive weight " + std::to_string(e.weight),
                        static_cast<std::int64_t>(i));
        if (iu->second == iv->second)
            throw Error(ErrorCode::invalid_input, "edge " + std::to_string(i) + " is a self loop",
                        static_cast<std::int64_t>(i));
        auto key = std::minmax(iu->second, iv->second);
        auto [it, inserted] = edge_weight.emplace(key, e.weight);
        if (!inserted) {
            ++report.duplicate_edges;
            it->second = std::min(it->second, e.weight);
        }
    }

    // Connected components; keep the largest (first in input order on ties).
    const std::size_t n = raw.vertices.size();
    std::vector<std::vector<std::size_t>> adj(n);
    for (const auto& [key, w] : edge_weight) {
        adj[key.first].push_back(key.second);
        adj[key.second].push_back(key.first);
    }
    std::vector<std::int64_t> comp(n, -1);
    std::vector<std::size_t> comp_size;
    for (std::size_t s = 0; s < n; ++s) {
        if (comp[s] >= 0) continue;
        const auto c = static_cast<std::int64_t>(comp_size.size());
        std::size_t size = 0;
        std::queue<std::size_t> q;
        q.push(s);
        comp[s] = c;
        while (!q.empty()) {
            auto u = q.front();
            q.pop();
            ++size;
            for (auto w : adj[u]) {
                if (comp[w] < 0) {
                    comp[w] = c;
                    q.push(w);
                }
            }
        }
        comp_size.push_back(size);
    }
    report.components = comp_size.size();
    const auto keep = static_cast<std::int64_t>(
        std::distance(comp_size.begin(), std::max_element(comp_size.begin(), comp_size.end())));

    RoadNetwork net;
    std::vector<VertexId> relabel(n, kNoVertex);
    for (std::size_t i = 0; i < n; ++i) {
        if (comp[i] != keep) {
            ++report.dropped_vertices;
            continue;
        }
        const auto id = static_cast<VertexId>(net.vertices_.size());
        relabel[i] = id;
        net.vertices_.push_back(Vertex{id, raw.vertices[i].lon, raw.vertices[i].lat});
        net.original_ids_.push_back(raw.vertices[i].id);
        net.by_original_.emplace(raw.vertices[i].id, id);
    }

    double max_weight = 0.0;
    for (const auto& [key, w] : edge_weight) {
        if (relabel[key.first] == kNoVertex) {
            ++report.dropped_edges;
            continue;
        }
        net.edges_.push_back(Edge{relabel[key.first], relabel[key.second], w});
        max_weight = std::max(max_weight, w);
    }

    double max_rating = 0.0;
    for (std::size_t i = 0; i < raw.pois.size(); ++i) {
        const auto& p = raw.pois[i];
        auto it = index.find(p.vertex);
        if (it == index.end())
            throw Error(ErrorCode::unknown_vertex, "poi " + std::to_string(i) + " references an unknown vertex",
                        static_cast<std::int64_t>(i));
        if (!(p.rating >= 0.0) || !std::isfinite(p.rating))
            throw Error(ErrorCode::invalid_input, "poi " + std::to_string(i) + " has a negative rating",
                        static_cast<std::int64_t>(i));
        if (relabel[it->second] == kNoVertex) {
            ++report.dropped_pois;
            continue;
        }
        const auto id = static_cast<PoiId>(net.pois_.size());
        net.pois_.push_back(Poi{id, relabel[it->second], p.keyword, p.rating});
        max_rating = std::max(max_rating, p.rating);
    }

    // Calibrate on input units, then carry the coefficient into normalized
    // units along with the weights.
    double c = kInfinity;
    for (const auto& e : net.edges_) {
        const double geo = coordinate_distance(net.vertices_[static_cast<std::size_t>(e.u)],
                                               net.vertices_[static_cast<std::size_t>(e.v)]);
        if (geo <= 0.0) {
            c = 0.0;
            break;
        }
        c = std::min(c, e.weight / geo);
    }
    if (!std::isfinite(c)) c = 1.0;

    if (options.rescale_weights && max_weight > 0.0) {
        for (auto& e : net.edges_) e.weight /= max_weight;
        net.weight_scale_ = max_weight;
        c /= max_weight;
    }
    if (options.rescale_ratings && !net.pois_.empty()) {
        if (max_rating > 0.0) {
            for (auto& p : net.pois_) p.rating = 10.0 * p.rating / max_rating;
            net.rating_scale_ = max_rating / 10.0;
        } else {
            for (auto& p : net.pois_) p.rating = 10.0;
            net.rating_scale_ = 0.0;
        }
    }
    net.euclid_coefficient_ = c * (1.0 - kCalibrationSlack);

    net.tags_ = raw.tags;
    net.report_ = report;
    net.build_adjacency();
    return net;
}

namespace {

template <typename Fn>
void for_each_record(const std::filesystem::path& file, Fn&& fn) {
    std::ifstream in(file);
    if (!in) throw Error(ErrorCode::io, "cannot open " + file.string());
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::istringstream fields(line);
        if (!fn(fields)) {
            throw Error(ErrorCode::invalid_input,
                        file.filename().string() + ":" + std::to_string(line_no) + ": malformed record",
                        static_cast<std::int64_t>(line_no));
        }
    }
}

}  // namespace

RawNetwork read_raw_network(const std::filesystem::path& vertices_file, const std::filesystem::path& edges_file,
                            const std::filesystem::path& pois_file,
                            const std::optional<std::filesystem::path>& tags_file) {
    RawNetwork raw;
    for_each_record(vertices_file, [&](std::istringstream& in) {
        RawVertex v;
        if (!(in >> v.id >> v.lon >> v.lat)) return false;
        raw.vertices.push_back(v);
        return true;
    });
    for_each_record(edges_file, [&](std::istringstream& in) {
        RawEdge e;
        if (!(in >> e.u >> e.v >> e.weight)) return false;
        raw.edges.push_back(e);
        return true;
    });
    if (std::filesystem::exists(pois_file)) {
        for_each_record(pois_file, [&](std::istringstream& in) {
            RawPoi p;
            if (!(in >> p.vertex >> p.keyword >> p.rating)) return false;
            raw.pois.push_back(p);
            return true;
        });
    }
    if (tags_file && std::filesystem::exists(*tags_file)) {
        for_each_record(*tags_file, [&](std::istringstream& in) {
            KeywordId k = 0;
            std::string tag;
            if (!(in >> k >> tag)) return false;
            raw.tags[k] = tag;
            return true;
        });
    }
    return raw;
}

RawNetwork read_raw_network_dir(const std::filesystem::path& dir) {
    return read_raw_network(dir / "vertices.txt", dir / "edges.txt", dir / "pois.txt", dir / "tags.txt");
}

void write_raw_network_dir(const RawNetwork& raw, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    auto open = [&](const char* name) {
        std::ofstream out(dir / name);
        if (!out) throw Error(ErrorCode::io, "cannot write " + (dir / name).string());
        out << std::setprecision(17);
        return out;
    };
    {
        auto out = open("vertices.txt");
        out << "# id lon lat\n";
        for (const auto& v : raw.vertices) out << v.id << ' ' << v.lon << ' ' << v.lat << '\n';
    }
    {
        auto out = open("edges.txt");
        out << "# u v weight\n";
        for (const auto& e : raw.edges) out << e.u << ' ' << e.v << ' ' << e.weight << '\n';
    }
    {
        auto out = open("pois.txt");
        out << "# vertex_id keyword_id rating\n";
        for (const auto& p : raw.pois) out << p.vertex << ' ' << p.keyword << ' ' << p.rating << '\n';
    }
    {
        auto out = open("tags.txt");
        out << "# keyword_id tag\n";
        for (const auto& [k, tag] : raw.tags) out << k << ' ' << tag << '\n';
    }
}

double coordinate_distance(const Vertex& a, const Vertex& b) { return std::hypot(a.lon - b.lon, a.lat - b.lat); }

std::vector<VertexId> ShortestPathTree::path_to(VertexId target) const {
    std::vector<VertexId> path;
    if (!std::isfinite(dist[static_cast<std::size_t>(target)])) return path;
    for (VertexId v = target; v != kNoVertex; v = pred[static_cast<std::size_t>(v)]) path.push_back(v);
    std::reverse(path.begin(), path.end());
    return path;
}

ShortestPathTree dijkstra(const RoadNetwork& net, VertexId source) {
    if (!net.valid_vertex(source))
        throw Error(ErrorCode::unknown_vertex, "unknown vertex " + std::to_string(source), source);
    ShortestPathTree tree;
    tree.source = source;
    tree.dist.assign(net.vertex_count(), kInfinity);
    tree.pred.assign(net.vertex_count(), kNoVertex);
    std::vector<char> done(net.vertex_count(), 0);
    using Item = std::pair<double, VertexId>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    tree.dist[static_cast<std::size_t>(source)] = 0.0;
    heap.emplace(0.0, source);
    while (!heap.empty()) {
        auto [d, u] = heap.top();
        heap.pop();
        if (done[static_cast<std::size_t>(u)]) continue;
        done[static_cast<std::size_t>(u)] = 1;
        for (const auto& arc : net.neighbors(u)) {
            const auto to = static_cast<std::size_t>(arc.to);
            if (done[to]) continue;
            const double nd = d + arc.weight;
            if (nd < tree.dist[to]) {
                tree.dist[to] = nd;
                tree.pred[to] = u;
                heap.emplace(nd, arc.to);
            } else if (nd == tree.dist[to] && u < tree.pred[to]) {
                tree.pred[to] = u;
            }
        }
    }
    return tree;
}

double shortest_distance(const RoadNetwork& net, VertexId s, VertexId t) {
    if (!net.valid_vertex(s)) throw Error(ErrorCode::unknown_vertex, "unknown vertex " + std::to_string(s), s);
    if (!net.valid_vertex(t)) throw Error(ErrorCode::unknown_vertex, "unknown vertex " + std::to_string(t), t);
    if (s == t) return 0.0;
    std::vector<double> dist(net.vertex_count(), kInfinity);
    using Item = std::pair<double, VertexId>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    dist[static_cast<std::size_t>(s)] = 0.0;
    heap.emplace(0.0, s);
    while (!heap.empty()) {
        auto [d, u] = heap.top();
        heap.pop();
        if (u == t) return d;
        if (d > dist[static_cast<std::size_t>(u)]) continue;
        for (const auto& arc : net.neighbors(u)) {
            const double nd = d + arc.weight;
            if (nd < dist[static_cast<std::size_t>(arc.to)]) {
                dist[static_cast<std::size_t>(arc.to)] = nd;
                heap.emplace(nd, arc.to);
            }
        }
    }
    return kInfinity;
}

double euclid_lower_bound(const RoadNetwork& net, VertexId s, VertexId t) {
    return net.euclid_coefficient() * coordinate_distance(net.vertex(s), net.vertex(t));
}

}  // namespace katr
