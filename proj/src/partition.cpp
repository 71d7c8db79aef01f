#include "katr/partition.hpp"

#include <algorithm>
#include <cmath>
#include <atomic>
#include <cstring>
#include <deque>
#include <fstream>
#include <numeric>
#include <queue>
#include <random>
#include <thread>

namespace katr {

const Subgraph& PartitionIndex::subgraph(SubgraphId id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= subgraphs_.size())
        throw Error(ErrorCode::unknown_subgraph, "unknown subgraph " + std::to_string(id), id);
    return subgraphs_[static_cast<std::size_t>(id)];
}

double PartitionIndex::intra_distance(VertexId a, VertexId b) const {
    const auto sa = assignment(a);
    if (sa != assignment(b))
        throw Error(ErrorCode::invalid_input, "vertices " + std::to_string(a) + " and " + std::to_string(b) +
                                                  " are in different subgraphs");
    const auto& sg = subgraphs_[static_cast<std::size_t>(sa)];
    return sg.local_distance(static_cast<std::size_t>(local_index(a)), static_cast<std::size_t>(local_index(b)));
}

std::vector<VertexId> PartitionIndex::intra_path(VertexId a, VertexId b) const {
    const auto& sg = subgraph(assignment(a));
    if (assignment(b) != sg.id)
        throw Error(ErrorCode::invalid_input, "vertices " + std::to_string(a) + " and " + std::to_string(b) +
                                                  " are in different subgraphs");
    const std::size_t n = sg.size();
    const auto s = static_cast<std::size_t>(local_index(a));
    auto t = static_cast<std::int32_t>(local_index(b));
    std::vector<VertexId> path;
    if (!std::isfinite(sg.local_distance(s, static_cast<std::size_t>(t)))) return path;
    while (t >= 0) {
        path.push_back(sg.members[static_cast<std::size_t>(t)]);
        if (static_cast<std::size_t>(t) == s) break;
        t = sg.pred[s * n + static_cast<std::size_t>(t)];
    }
    std::reverse(path.begin(), path.end());
    return path;
}

std::vector<Shortcut> PartitionIndex::border_shortcuts(SubgraphId id) const {
    const auto& sg = subgraph(id);
    std::vector<Shortcut> out;
    for (auto a : sg.borders) {
        for (auto b : sg.borders) {
            if (a == b) continue;
            const double d = sg.local_distance(static_cast<std::size_t>(local_index(a)),
                                               static_cast<std::size_t>(local_index(b)));
            if (std::isfinite(d)) out.push_back(Shortcut{a, b, d});
        }
    }
    return out;
}

PartitionIndex PartitionIndex::from_assignment(const RoadNetwork& net, std::vector<SubgraphId> assignment,
                                               std::size_t max_size) {
    const std::size_t n = net.vertex_count();
    if (assignment.size() != n) throw Error(ErrorCode::invalid_input, "assignment size does not match network");
    SubgraphId count = 0;
    for (auto s : assignment) {
        if (s < 0) throw Error(ErrorCode::invalid_input, "negative subgraph id in assignment", s);
        count = std::max(count, s + 1);
    }
    PartitionIndex pi;
    pi.max_size_ = max_size;
    pi.fingerprint_ = net.fingerprint();
    pi.subgraphs_.resize(static_cast<std::size_t>(count));
    for (SubgraphId s = 0; s < count; ++s) pi.subgraphs_[static_cast<std::size_t>(s)].id = s;
    pi.local_index_.assign(n, -1);
    for (VertexId v = 0; v < static_cast<VertexId>(n); ++v) {
        auto& sg = pi.subgraphs_[static_cast<std::size_t>(assignment[static_cast<std::size_t>(v)])];
        pi.local_index_[static_cast<std::size_t>(v)] = static_cast<std::int32_t>(sg.members.size());
        sg.members.push_back(v);
    }
    for (const auto& sg : pi.subgraphs_) {
        if (sg.members.empty())
            throw Error(ErrorCode::invalid_input, "subgraph " + std::to_string(sg.id) + " is empty", sg.id);
        if (sg.members.size() > max_size)
            throw Error(ErrorCode::invalid_input, "subgraph " + std::to_string(sg.id) + " exceeds size bound", sg.id);
    }
    pi.is_border_.assign(n, 0);
    for (const auto& e : net.edges()) {
        if (assignment[static_cast<std::size_t>(e.u)] == assignment[static_cast<std::size_t>(e.v)]) continue;
        pi.is_border_[static_cast<std::size_t>(e.u)] = 1;
        pi.is_border_[static_cast<std::size_t>(e.v)] = 1;
        pi.external_edges_.push_back(ExternalEdge{std::min(e.u, e.v), std::max(e.u, e.v), e.weight});
    }
    for (auto& sg : pi.subgraphs_) {
        for (auto v : sg.members)
            if (pi.is_border_[static_cast<std::size_t>(v)]) sg.borders.push_back(v);
    }
    pi.assignment_ = std::move(assignment);
    return pi;
}

std::vector<SubgraphId> BfsGrowPartitioner::assign(const RoadNetwork& net, std::size_t max_size) const {
    const std::size_t n = net.vertex_count();
    std::vector<SubgraphId> part(n, -1);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(seed_);
    std::shuffle(order.begin(), order.end(), rng);

    std::vector<std::size_t> sizes;
    std::deque<VertexId> boundary;
    std::size_t fallback = 0;
    std::size_t assigned = 0;
    while (assigned < n) {
        VertexId seed = kNoVertex;
        while (!boundary.empty()) {
            auto v = boundary.front();
            boundary.pop_front();
            if (part[static_cast<std::size_t>(v)] < 0) {
                seed = v;
                break;
            }
        }
        if (seed == kNoVertex) {
            while (part[order[fallback]] >= 0) ++fallback;
            seed = static_cast<VertexId>(order[fallback]);
        }
        const auto id = static_cast<SubgraphId>(sizes.size());
        std::size_t size = 0;
        std::deque<VertexId> q{seed};
        part[static_cast<std::size_t>(seed)] = id;
        ++size;
        while (!q.empty()) {
            auto u = q.front();
            q.pop_front();
            for (const auto& a : net.neighbors(u)) {
                if (part[static_cast<std::size_t>(a.to)] >= 0) continue;
                if (size < max_size) {
                    part[static_cast<std::size_t>(a.to)] = id;
                    ++size;
                    q.push_back(a.to);
                } else {
                    boundary.push_back(a.to);
                }
            }
        }
        sizes.push_back(size);
        assigned += size;
    }

    // Fold fragments below half the bound into the smallest neighbour that
    // still fits.
    bool changed = true;
    while (changed) {
        changed = false;
        std::vector<std::vector<SubgraphId>> adjacent(sizes.size());
        for (const auto& e : net.edges()) {
            auto a = part[static_cast<std::size_t>(e.u)];
            auto b = part[static_cast<std::size_t>(e.v)];
            if (a == b) continue;
            adjacent[static_cast<std::size_t>(a)].push_back(b);
            adjacent[static_cast<std::size_t>(b)].push_back(a);
        }
        std::vector<SubgraphId> target(sizes.size());
        std::iota(target.begin(), target.end(), 0);
        std::vector<char> touched(sizes.size(), 0);
        for (std::size_t r = 0; r < sizes.size(); ++r) {
            if (sizes[r] == 0 || touched[r] || 2 * sizes[r] >= max_size) continue;
            SubgraphId best = -1;
            for (auto a : adjacent[r]) {
                const auto as = static_cast<std::size_t>(a);
                if (touched[as] || sizes[as] == 0 || sizes[as] + sizes[r] > max_size) continue;
                if (best < 0 || sizes[as] < sizes[static_cast<std::size_t>(best)] ||
                    (sizes[as] == sizes[static_cast<std::size_t>(best)] && a < best))
                    best = a;
            }
            if (best < 0) continue;
            target[r] = best;
            sizes[static_cast<std::size_t>(best)] += sizes[r];
            sizes[r] = 0;
            touched[r] = touched[static_cast<std::size_t>(best)] = 1;
            changed = true;
        }
        if (changed)
            for (auto& p : part) p = target[static_cast<std::size_t>(p)];
    }

    // Dense relabel in order of first appearance.
    std::vector<SubgraphId> relabel(sizes.size(), -1);
    SubgraphId next = 0;
    for (auto& p : part) {
        auto& r = relabel[static_cast<std::size_t>(p)];
        if (r < 0) r = next++;
        p = r;
    }
    return part;
}

PartitionIndex partition(const RoadNetwork& net, std::size_t max_size, const Partitioner& partitioner) {
    if (max_size < 2)
        throw Error(ErrorCode::invalid_partition_size, "partition size must be at least 2",
                    static_cast<std::int64_t>(max_size));
    return PartitionIndex::from_assignment(net, partitioner.assign(net, max_size), max_size);
}

PartitionIndex partition(const RoadNetwork& net, std::size_t max_size) {
    return partition(net, max_size, BfsGrowPartitioner{});
}

namespace {

void fill_tables(Subgraph& sg, const RoadNetwork& net, const PartitionIndex& pi) {
    const std::size_t n = sg.size();
    std::vector<std::vector<Arc>> adj(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (const auto& a : net.neighbors(sg.members[i])) {
            if (pi.assignment(a.to) != sg.id) continue;
            adj[i].push_back(Arc{pi.local_index(a.to), a.weight});
        }
    }
    sg.dist.assign(n * (n + 1) / 2, kInfinity);
    sg.pred.assign(n * n, -1);
    std::vector<double> d(n);
    std::vector<char> done(n);
    using Item = std::pair<double, std::int32_t>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    for (std::size_t s = 0; s < n; ++s) {
        std::fill(d.begin(), d.end(), kInfinity);
        std::fill(done.begin(), done.end(), 0);
        std::int32_t* pred = sg.pred.data() + s * n;
        d[s] = 0.0;
        heap.emplace(0.0, static_cast<std::int32_t>(s));
        while (!heap.empty()) {
            auto [du, u] = heap.top();
            heap.pop();
            if (done[static_cast<std::size_t>(u)]) continue;
            done[static_cast<std::size_t>(u)] = 1;
            for (const auto& a : adj[static_cast<std::size_t>(u)]) {
                const auto t = static_cast<std::size_t>(a.to);
                if (done[t]) continue;
                const double nd = du + a.weight;
                if (nd < d[t]) {
                    d[t] = nd;
                    pred[t] = u;
                    heap.emplace(nd, a.to);
                } else if (nd == d[t] && u < pred[t]) {
                    pred[t] = u;
                }
            }
        }
        for (std::size_t t = 0; t <= s; ++t) sg.dist[s * (s + 1) / 2 + t] = d[t];
    }
}

}  // namespace

void build_intra_distances(PartitionIndex& pi, const RoadNetwork& net, unsigned threads) {
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(1, pi.subgraphs_.size())));
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < pi.subgraphs_.size(); i = next++) fill_tables(pi.subgraphs_[i], net, pi);
    };
    if (threads <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    pi.has_tables_ = true;
}

PartitionIndex build_partition_index(const RoadNetwork& net, std::size_t max_size, unsigned threads) {
    auto pi = partition(net, max_size);
    build_intra_distances(pi, net, threads);
    return pi;
}

namespace {

constexpr char kMagic[8] = {'K', 'A', 'T', 'R', 'P', 'I', 'D', 'X'};
constexpr std::uint32_t kFormatVersion = 1;

template <typename T>
void put(std::ostream& out, const T& value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
void put_vec(std::ostream& out, const std::vector<T>& v) {
    put<std::uint64_t>(out, v.size());
    out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(T)));
}

template <typename T>
T get(std::istream& in) {
    T value{};
    if (!in.read(reinterpret_cast<char*>(&value), sizeof(T)))
        throw Error(ErrorCode::io, "truncated partition file");
    return value;
}

template <typename T>
std::vector<T> get_vec(std::istream& in) {
    const auto n = get<std::uint64_t>(in);
    if (n > (std::uint64_t{1} << 40)) throw Error(ErrorCode::io, "corrupt partition file");
    std::vector<T> v(n);
    if (!in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(T))))
        throw Error(ErrorCode::io, "truncated partition file");
    return v;
}

}  // namespace

void save_partition(const PartitionIndex& pi, const std::filesystem::path& file) {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw Error(ErrorCode::io, "cannot write " + file.string());
    out.write(kMagic, sizeof(kMagic));
    put(out, kFormatVersion);
    put<std::uint64_t>(out, pi.fingerprint_);
    put<std::uint64_t>(out, pi.max_size_);
    put<std::uint8_t>(out, pi.has_tables_ ? 1 : 0);
    put_vec(out, pi.assignment_);
    put_vec(out, pi.external_edges_);
    put<std::uint64_t>(out, pi.subgraphs_.size());
    for (const auto& sg : pi.subgraphs_) {
        put_vec(out, sg.dist);
        put_vec(out, sg.pred);
    }
    if (!out) throw Error(ErrorCode::io, "failed writing " + file.string());
}

PartitionIndex load_partition(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw Error(ErrorCode::io, "cannot open " + file.string());
    char magic[8];
    if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw Error(ErrorCode::index_mismatch, file.string() + " is not a partition index");
    if (get<std::uint32_t>(in) != kFormatVersion)
        throw Error(ErrorCode::index_mismatch, file.string() + " has an unsupported format version");
    PartitionIndex pi;
    pi.fingerprint_ = get<std::uint64_t>(in);
    pi.max_size_ = get<std::uint64_t>(in);
    pi.has_tables_ = get<std::uint8_t>(in) != 0;
    pi.assignment_ = get_vec<SubgraphId>(in);
    pi.external_edges_ = get_vec<ExternalEdge>(in);
    const auto count = get<std::uint64_t>(in);
    const std::size_t n = pi.assignment_.size();
    pi.subgraphs_.resize(count);
    pi.local_index_.assign(n, -1);
    for (std::size_t v = 0; v < n; ++v) {
        const auto s = pi.assignment_[v];
        if (s < 0 || static_cast<std::uint64_t>(s) >= count) throw Error(ErrorCode::io, "corrupt partition file");
        auto& sg = pi.subgraphs_[static_cast<std::size_t>(s)];
        pi.local_index_[v] = static_cast<std::int32_t>(sg.members.size());
        sg.members.push_back(static_cast<VertexId>(v));
    }
    pi.is_border_.assign(n, 0);
    for (const auto& e : pi.external_edges_) {
        if (e.u < 0 || e.v < 0 || static_cast<std::size_t>(e.u) >= n || static_cast<std::size_t>(e.v) >= n)
            throw Error(ErrorCode::io, "corrupt partition file");
        pi.is_border_[static_cast<std::size_t>(e.u)] = 1;
        pi.is_border_[static_cast<std::size_t>(e.v)] = 1;
    }
    for (std::uint64_t i = 0; i < count; ++i) {
        auto& sg = pi.subgraphs_[i];
        sg.id = static_cast<SubgraphId>(i);
        for (auto v : sg.members)
            if (pi.is_border_[static_cast<std::size_t>(v)]) sg.borders.push_back(v);
        sg.dist = get_vec<double>(in);
        sg.pred = get_vec<std::int32_t>(in);
        const auto m = sg.members.size();
        if (pi.has_tables_ && (sg.dist.size() != m * (m + 1) / 2 || sg.pred.size() != m * m))
            throw Error(ErrorCode::io, "corrupt partition file");
    }
    return pi;
}

PartitionIndex load_or_build_partition(const RoadNetwork& net, const std::filesystem::path& file,
                                       std::size_t max_size, bool* rebuilt) {
    if (std::filesystem::exists(file)) {
        try {
            auto stored = load_partition(file);
            if (stored.network_fingerprint() == net.fingerprint() && stored.max_subgraph_size() == max_size &&
                stored.has_intra_tables() && stored.assignment().size() == net.vertex_count()) {
                if (rebuilt) *rebuilt = false;
                return stored;
            }
        } catch (const Error&) {
            // unreadable or stale: rebuild below
        }
    }
    auto pi = build_partition_index(net, max_size);
    save_partition(pi, file);
    if (rebuilt) *rebuilt = true;
    return pi;
}

BorderSkeleton::BorderSkeleton(const RoadNetwork& net, const PartitionIndex& pi) {
    node_of_.assign(net.vertex_count(), -1);
    for (VertexId v = 0; v < static_cast<VertexId>(net.vertex_count()); ++v) {
        if (!pi.is_border(v)) continue;
        node_of_[static_cast<std::size_t>(v)] = static_cast<std::int32_t>(nodes_.size());
        nodes_.push_back(v);
    }
    std::vector<std::vector<SkelArc>> adj(nodes_.size());
    for (const auto& e : pi.external_edges()) {
        auto a = node_of(e.u);
        auto b = node_of(e.v);
        adj[static_cast<std::size_t>(a)].push_back(SkelArc{b, e.weight, false});
        adj[static_cast<std::size_t>(b)].push_back(SkelArc{a, e.weight, false});
    }
    for (const auto& sg : pi.subgraphs()) {
        for (const auto& s : pi.border_shortcuts(sg.id))
            adj[static_cast<std::size_t>(node_of(s.from))].push_back(SkelArc{node_of(s.to), s.distance, true});
    }
    offsets_.assign(nodes_.size() + 1, 0);
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        std::sort(adj[i].begin(), adj[i].end(), [](const SkelArc& x, const SkelArc& y) {
            return x.to != y.to ? x.to < y.to : x.weight < y.weight;
        });
        offsets_[i + 1] = offsets_[i] + adj[i].size();
    }
    arcs_.reserve(offsets_.back());
    for (auto& a : adj) arcs_.insert(arcs_.end(), a.begin(), a.end());
}

}  // namespace katr
