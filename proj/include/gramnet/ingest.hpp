#pragma once

#include "gramnet/suffstats.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace gramnet {

/// Everything the one-pass ingestion needs: input layout, fold count, seed and
/// rejection policy.
struct IngestConfig {
    int k = 5;
    std::uint64_t seed = 0;
    std::string response;              // column name, zero-based index, or "last"
    std::vector<std::string> features; // names or indices; empty = all except response
    char delimiter = ',';
    bool has_header = true;
    std::vector<std::string> shards;   // input files, in ordinal order
    double rejection_cap = 0.01;       // abort when rejected/total exceeds this
    int threads = 0;                   // 0 = hardware concurrency
    bool kahan = false;                // compensated accumulation

    void validate() const;
};

/// Input columns resolved against a header line (or synthesized c0..c(m-1)).
struct Schema {
    std::vector<std::string> columns;  // every input column, file order
    int response_index = -1;
    std::vector<int> feature_indices;  // model feature order

    Eigen::Index p() const { return static_cast<Eigen::Index>(feature_indices.size()); }
    std::vector<std::string> feature_names() const;
    const std::string& response_name() const { return columns[static_cast<std::size_t>(response_index)]; }
};

/// Resolve response/feature columns from the first line of the data.
/// With has_header the line supplies the names; otherwise it only fixes the
/// field count and names are synthesized.
Schema resolve_schema(const IngestConfig& config, std::string_view first_line);

/// Split one record into delimited fields (views into `line`).
void split_fields(std::string_view line, char delimiter, std::vector<std::string_view>& out);

/// Locale-independent parse of one whole field (padding trimmed) into a double.
bool parse_field_double(std::string_view field, char delimiter, double& out);

/// Why a record was rejected. `column` is the input column index (-1 when the
/// field count itself is wrong).
struct RecordError {
    enum class Kind { FieldCount, BadNumber, NonFinite };
    Kind kind = Kind::FieldCount;
    int column = -1;
    std::string describe() const;
};

/// Splits delimited records and extracts the response + features in model order.
/// Numeric parsing is locale-independent (decimal point only). Malformed records
/// report a RecordError instead of throwing; the stream-level rejection policy
/// lives in map_shard/ingest.
class RecordParser {
  public:
    RecordParser(const Schema& schema, char delimiter);

    /// Returns true and fills `out` on success; false and fills `err` otherwise.
    bool parse_record(std::string_view line, Sample& out, RecordError& err);

  private:
    char delimiter_;
    std::size_t n_columns_;
    std::size_t n_features_;
    std::vector<int> roles_; // column -> feature slot, -1 ignored, -2 response
    std::vector<std::string_view> fields_;
};

/// Deterministic fold key for a record: a splitmix64 finalizer over
/// seed XOR ordinal, reduced mod k by rejection sampling so the keys are
/// unbiased. Depends only on (ordinal, seed, k) — never on shard layout or
/// worker scheduling.
int assign_fold(std::uint64_t record_ordinal, std::uint64_t seed, int k);

/// Per-fold statistics out of the reduce phase.
struct FoldedStats {
    std::vector<SuffStats> folds;
    std::int64_t total_records = 0;
    std::int64_t rejected_records = 0;

    int k() const { return static_cast<int>(folds.size()); }
    Eigen::Index p() const { return folds.empty() ? 0 : folds.front().dim(); }
};

/// Map phase over one shard: stream its records once, accumulate per-fold
/// partials locally (combiner semantics, no per-record hand-off).
/// `ordinal_base` is the global ordinal of the shard's first record. Rejected
/// records are counted, consume an ordinal, and the first few are described in
/// `warnings` when given. Throws IngestError on I/O failure.
FoldedStats map_shard(const std::string& path, const IngestConfig& config, const Schema& schema,
                      std::uint64_t ordinal_base, std::vector<std::string>* warnings = nullptr);

/// Reduce phase: fold-wise merge of shard partials, counts reconciled.
/// Throws IncompatibleError when fold counts or dimensions differ.
FoldedStats reduce_folds(const std::vector<FoldedStats>& partials);

/// Count the records (non-empty data lines) of one shard. Metadata scan only:
/// nothing is parsed. Used to fix global ordinals before parallel map.
std::int64_t count_records(const std::string& path, bool has_header);

struct IngestResult {
    FoldedStats folded;
    Schema schema;
    std::vector<std::string> warnings;
};

/// The whole one-pass pipeline: resolve schema, fix shard ordinal bases, map
/// shards in parallel, reduce in shard order, enforce the rejection cap.
IngestResult ingest(const IngestConfig& config);

/// Process-wide count of records parsed so far; the one-pass instrumentation.
/// A training run must advance this by exactly the dataset size.
std::uint64_t records_parsed_total();

/// Versioned JSON checkpoint of FoldedStats so later phases can rerun without
/// re-reading data. Fields per fold are written in the order
/// n, sum_y, sum_yy, sum_x, xty, xtx_upper. Round-trip is value-exact.
struct Checkpoint {
    FoldedStats folded;
    std::vector<std::string> feature_names;
    std::string response_name;
    std::uint64_t seed = 0;
};

void save_checkpoint(const std::string& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::string& path);

} // namespace gramnet
