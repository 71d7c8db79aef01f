#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "katr/engine.hpp"

namespace katr {

/// `key = value` lines, '#' comments. Later keys override earlier ones.
class Config {
public:
    static Config load(const std::filesystem::path& file);
    static Config parse(const std::string& text);

    bool has(const std::string& key) const { return values_.count(key) != 0; }
    std::string get(const std::string& key, const std::string& fallback) const;
    double get(const std::string& key, double fallback) const;
    std::size_t get(const std::string& key, std::size_t fallback) const;
    bool get(const std::string& key, bool fallback) const;
    void set(const std::string& key, const std::string& value) { values_[key] = value; }
    const std::map<std::string, std::string>& values() const { return values_; }

private:
    std::map<std::string, std::string> values_;
};

/// Comma list of numbers, with `a..b` ranges for integers ("2..4,6").
std::vector<double> parse_number_list(const std::string& text);

struct WorkloadParams {
    std::uint64_t seed = 7;
    std::size_t queries = 100;
    std::vector<std::size_t> m_values{3};
    std::vector<std::size_t> k_values{4};
    std::vector<double> alpha_values{0.5};
};

struct BenchQuery {
    std::size_t id = 0;
    Query query;
};

/// `queries` queries per grid point; sources uniform over vertices,
/// keywords drawn without replacement from the keywords that have POIs.
std::vector<BenchQuery> generate_workload(const KatrIndex& ix, const WorkloadParams& params);

enum class Variant { full, nosr, nosg, noed, oracle };

Variant parse_variant(const std::string& name);
std::string to_string(Variant v);
/// Engine options for an engine variant; each ablation disables one stage.
EngineOptions variant_options(Variant v);

struct BenchRecord {
    std::size_t query_id = 0;
    Variant variant = Variant::full;
    VertexId source = 0;
    std::vector<KeywordId> keywords;
    std::size_t k = 0;
    double alpha = 0.0;
    bool skipped = false;  // oracle over its enumeration limit
    bool partial = false;
    PruneCounters counters;
    std::vector<double> scores;
    std::vector<double> distances;  // normalized
    std::vector<double> ratings;
    double wall_ms = 0.0;
};

struct BenchOptions {
    std::vector<Variant> variants{Variant::full, Variant::nosr, Variant::nosg, Variant::noed};
    unsigned threads = 1;
    double oracle_limit = 1e7;
};

/// Runs every query under every variant on a worker pool. Records come
/// back ordered by (query id, variant position).
std::vector<BenchRecord> run_bench(const KatrIndex& ix, const std::vector<BenchQuery>& queries,
                                   const BenchOptions& options);

/// Query ids whose variants disagree with the first variant on scores.
std::vector<std::size_t> variant_mismatches(const std::vector<BenchRecord>& records, double tolerance = 1e-9);

void write_csv(std::ostream& out, const std::vector<BenchRecord>& records, bool timing = true);
std::vector<BenchRecord> read_csv(std::istream& in);

struct ReportRow {
    std::string variant;
    std::size_t m = 0;
    std::size_t k = 0;
    double alpha = 0.0;
    std::size_t records = 0;
    double mean_ms = 0.0;
    double p50_ms = 0.0;
    double p95_ms = 0.0;
    double p99_ms = 0.0;
    double mean_visited = 0.0;
    double mean_legs = 0.0;
    double sg_sr_ratio = 0.0;  // n(SR)/n(RN)
    double sg_bp_ratio = 0.0;  // n(BP)/n(SR)
    double cps_sr_ratio = 0.0;
    double cps_bp_ratio = 0.0;
    double cpr_skip_ratio = 0.0;  // visit orders not graph-evaluated
    std::optional<double> estimate;
};

struct EstimatorInputs {
    double area = 1.0;
    double pois_per_keyword = 10.0;
    double tau_high = 10.0;
    double tau_low = 6.0;
};

/// Estimator inputs measured on a network: bounding-box area in
/// normalized distance units (through the calibration coefficient), mean
/// POIs per keyword and the normalized rating range.
EstimatorInputs estimator_inputs(const RoadNetwork& net);

/// Aggregates per (variant, m, k, alpha), plus one "all" row per variant
/// (m = k = 0). Ratios are ratio-of-sums; records skipped by the oracle are
/// left out. Throws invalid_input on an empty record list.
std::vector<ReportRow> summarize(const std::vector<BenchRecord>& records,
                                 const std::optional<EstimatorInputs>& estimator = std::nullopt);
void write_report(std::ostream& out, const std::vector<ReportRow>& rows);

}  // namespace katr
