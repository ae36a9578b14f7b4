#include "gramnet/ingest.hpp"

#include "gramnet/errors.hpp"
#include "gramnet/parallel.hpp"

#include "json.hpp"

#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>

namespace gramnet {

namespace {

std::atomic<std::uint64_t> g_records_parsed{0};

std::string_view trim_field(std::string_view s, char delimiter) {
    const auto is_pad = [delimiter](char c) {
        return (c == ' ' || c == '\t') && c != delimiter;
    };
    while (!s.empty() && is_pad(s.front())) {
        s.remove_prefix(1);
    }
    while (!s.empty() && is_pad(s.back())) {
        s.remove_suffix(1);
    }
    return s;
}

void strip_cr(std::string& line) {
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
}

// Interpret a config column reference: exact name match first, then a numeric
// index, then "last".
int resolve_column(const std::string& ref, const std::vector<std::string>& columns,
                   const char* what) {
    if (ref == "last") {
        return static_cast<int>(columns.size()) - 1;
    }
    for (std::size_t i = 0; i < columns.size(); ++i) {
        if (columns[i] == ref) {
            return static_cast<int>(i);
        }
    }
    int index = -1;
    const auto [ptr, ec] = std::from_chars(ref.data(), ref.data() + ref.size(), index);
    if (ec == std::errc{} && ptr == ref.data() + ref.size() && index >= 0 &&
        index < static_cast<int>(columns.size())) {
        return index;
    }
    throw IngestError(std::string(what) + " column not found: '" + ref + "'");
}

// First non-empty line of a shard, if any.
std::optional<std::string> first_data_line(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IngestError("cannot open input file: " + path);
    }
    std::string line;
    while (std::getline(in, line)) {
        strip_cr(line);
        if (!line.empty()) {
            return line;
        }
    }
    return std::nullopt;
}

} // namespace

void split_fields(std::string_view line, char delimiter, std::vector<std::string_view>& out) {
    out.clear();
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
        if (i == line.size() || line[i] == delimiter) {
            out.push_back(line.substr(start, i - start));
            start = i + 1;
        }
    }
}

bool parse_field_double(std::string_view field, char delimiter, double& out) {
    field = trim_field(field, delimiter);
    if (field.empty()) {
        return false;
    }
    const char* first = field.data();
    const char* last = field.data() + field.size();
    const auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc{} && ptr == last;
}

void IngestConfig::validate() const {
    if (k < 2) {
        throw IngestError("fold count k must be >= 2, got " + std::to_string(k));
    }
    if (shards.empty()) {
        throw IngestError("no input files given");
    }
    if (response.empty()) {
        throw IngestError("response column is required");
    }
    if (!(rejection_cap >= 0.0 && rejection_cap <= 1.0)) {
        throw IngestError("rejection cap must lie in [0, 1]");
    }
    if (delimiter == '\n' || delimiter == '\r') {
        throw IngestError("delimiter cannot be a line break");
    }
}

std::vector<std::string> Schema::feature_names() const {
    std::vector<std::string> names;
    names.reserve(feature_indices.size());
    for (int idx : feature_indices) {
        names.push_back(columns[static_cast<std::size_t>(idx)]);
    }
    return names;
}

Schema resolve_schema(const IngestConfig& config, std::string_view first_line) {
    std::vector<std::string_view> fields;
    split_fields(first_line, config.delimiter, fields);

    Schema schema;
    schema.columns.reserve(fields.size());
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (config.has_header) {
            schema.columns.emplace_back(trim_field(fields[i], config.delimiter));
        } else {
            schema.columns.push_back("c" + std::to_string(i));
        }
    }

    schema.response_index = resolve_column(config.response, schema.columns, "response");
    if (config.features.empty()) {
        for (int i = 0; i < static_cast<int>(schema.columns.size()); ++i) {
            if (i != schema.response_index) {
                schema.feature_indices.push_back(i);
            }
        }
    } else {
        for (const std::string& ref : config.features) {
            const int idx = resolve_column(ref, schema.columns, "feature");
            if (idx == schema.response_index) {
                throw IngestError("feature '" + ref + "' is the response column");
            }
            for (int seen : schema.feature_indices) {
                if (seen == idx) {
                    throw IngestError("duplicate feature column: '" + ref + "'");
                }
            }
            schema.feature_indices.push_back(idx);
        }
    }
    if (schema.feature_indices.empty()) {
        throw IngestError("feature set is empty");
    }
    return schema;
}

std::string RecordError::describe() const {
    switch (kind) {
    case Kind::FieldCount:
        return "wrong field count";
    case Kind::BadNumber:
        return "unparseable number in column " + std::to_string(column);
    case Kind::NonFinite:
        return "non-finite value in column " + std::to_string(column);
    }
    return "rejected";
}

RecordParser::RecordParser(const Schema& schema, char delimiter)
    : delimiter_(delimiter), n_columns_(schema.columns.size()),
      n_features_(schema.feature_indices.size()), roles_(schema.columns.size(), -1) {
    for (std::size_t slot = 0; slot < schema.feature_indices.size(); ++slot) {
        roles_[static_cast<std::size_t>(schema.feature_indices[slot])] = static_cast<int>(slot);
    }
    roles_[static_cast<std::size_t>(schema.response_index)] = -2;
    fields_.reserve(n_columns_);
}

bool RecordParser::parse_record(std::string_view line, Sample& out, RecordError& err) {
    split_fields(line, delimiter_, fields_);
    if (fields_.size() != n_columns_) {
        err = {RecordError::Kind::FieldCount, -1};
        return false;
    }
    if (out.x.size() != static_cast<Eigen::Index>(n_features_)) {
        out.x.resize(static_cast<Eigen::Index>(n_features_));
    }
    for (std::size_t c = 0; c < n_columns_; ++c) {
        const int role = roles_[c];
        if (role == -1) {
            continue;
        }
        double value = 0.0;
        if (!parse_field_double(fields_[c], delimiter_, value)) {
            err = {RecordError::Kind::BadNumber, static_cast<int>(c)};
            return false;
        }
        if (!std::isfinite(value)) {
            err = {RecordError::Kind::NonFinite, static_cast<int>(c)};
            return false;
        }
        if (role == -2) {
            out.y = value;
        } else {
            out.x[role] = value;
        }
    }
    return true;
}

namespace {

inline std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

} // namespace

int assign_fold(std::uint64_t record_ordinal, std::uint64_t seed, int k) {
    const auto kk = static_cast<std::uint64_t>(k);
    std::uint64_t h = splitmix64(seed ^ record_ordinal);
    // Rejection sampling: re-hash while h falls in the biased tail of 2^64 mod k.
    const std::uint64_t tail = (UINT64_MAX % kk + 1) % kk;
    if (tail != 0) {
        while (h > UINT64_MAX - tail) {
            h = splitmix64(h);
        }
    }
    return static_cast<int>(h % kk);
}

FoldedStats map_shard(const std::string& path, const IngestConfig& config, const Schema& schema,
                      std::uint64_t ordinal_base, std::vector<std::string>* warnings) {
    constexpr int kMaxWarnings = 10;
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IngestError("cannot open shard: " + path);
    }

    FoldedStats out;
    out.folds.assign(static_cast<std::size_t>(config.k), SuffStats(schema.p()));
    std::vector<KahanState> comp;
    if (config.kahan) {
        comp.assign(static_cast<std::size_t>(config.k), KahanState(schema.p()));
    }

    RecordParser parser(schema, config.delimiter);
    Sample sample;
    RecordError err;
    std::string line;
    std::uint64_t ordinal = ordinal_base;
    std::int64_t line_no = 0;
    bool header_pending = config.has_header;
    while (std::getline(in, line)) {
        ++line_no;
        strip_cr(line);
        if (line.empty()) {
            continue;
        }
        if (header_pending) {
            header_pending = false;
            continue;
        }
        g_records_parsed.fetch_add(1, std::memory_order_relaxed);
        ++out.total_records;
        if (parser.parse_record(line, sample, err)) {
            const auto fold = static_cast<std::size_t>(assign_fold(ordinal, config.seed, config.k));
            if (config.kahan) {
                accumulate_kahan(out.folds[fold], comp[fold], sample.x, sample.y);
            } else {
                out.folds[fold].accumulate(sample.x, sample.y);
            }
        } else {
            ++out.rejected_records;
            if (warnings && out.rejected_records <= kMaxWarnings) {
                warnings->push_back(path + ":" + std::to_string(line_no) + ": " + err.describe());
            }
        }
        ++ordinal;
    }
    if (in.bad()) {
        throw IngestError("I/O error while reading shard: " + path);
    }
    return out;
}

FoldedStats reduce_folds(const std::vector<FoldedStats>& partials) {
    if (partials.empty()) {
        throw IncompatibleError("reduce_folds needs at least one partial");
    }
    FoldedStats out = partials.front();
    for (std::size_t i = 1; i < partials.size(); ++i) {
        const FoldedStats& part = partials[i];
        if (part.k() != out.k()) {
            throw IncompatibleError("fold count mismatch between partials: " +
                                    std::to_string(out.k()) + " vs " + std::to_string(part.k()));
        }
        for (std::size_t f = 0; f < out.folds.size(); ++f) {
            out.folds[f] = merge(out.folds[f], part.folds[f]);
        }
        out.total_records += part.total_records;
        out.rejected_records += part.rejected_records;
    }
    return out;
}

std::int64_t count_records(const std::string& path, bool has_header) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IngestError("cannot open shard: " + path);
    }
    std::int64_t count = 0;
    bool header_pending = has_header;
    std::string line;
    while (std::getline(in, line)) {
        strip_cr(line);
        if (line.empty()) {
            continue;
        }
        if (header_pending) {
            header_pending = false;
            continue;
        }
        ++count;
    }
    if (in.bad()) {
        throw IngestError("I/O error while reading shard: " + path);
    }
    return count;
}

IngestResult ingest(const IngestConfig& config) {
    config.validate();

    // Schema comes from the first shard that has any content.
    std::optional<Schema> schema;
    for (const std::string& path : config.shards) {
        if (const auto line = first_data_line(path)) {
            schema = resolve_schema(config, *line);
            break;
        }
    }
    if (!schema) {
        throw IngestError("all input files are empty; cannot determine schema");
    }

    // Global ordinals: records keep their position in the shard-concatenation
    // order, so fold assignment is invariant to how the data is sharded. The
    // bases need a metadata scan when there is more than one shard.
    const std::size_t n_shards = config.shards.size();
    std::vector<std::uint64_t> bases(n_shards, 0);
    if (n_shards > 1) {
        std::uint64_t running = 0;
        for (std::size_t s = 0; s < n_shards; ++s) {
            bases[s] = running;
            running += static_cast<std::uint64_t>(count_records(config.shards[s], config.has_header));
        }
    }

    std::vector<FoldedStats> partials(n_shards);
    std::vector<std::vector<std::string>> shard_warnings(n_shards);
    parallel_for_index(n_shards, config.threads, [&](std::size_t s) {
        partials[s] = map_shard(config.shards[s], config, *schema, bases[s], &shard_warnings[s]);
    });

    IngestResult result;
    result.folded = reduce_folds(partials);
    result.schema = *schema;
    for (auto& w : shard_warnings) {
        result.warnings.insert(result.warnings.end(), w.begin(), w.end());
    }

    const FoldedStats& folded = result.folded;
    if (folded.total_records > 0 &&
        static_cast<double>(folded.rejected_records) >
            config.rejection_cap * static_cast<double>(folded.total_records)) {
        std::ostringstream msg;
        msg << "rejected " << folded.rejected_records << " of " << folded.total_records
            << " records, above the cap of " << config.rejection_cap;
        throw IngestError(msg.str());
    }
    return result;
}

std::uint64_t records_parsed_total() {
    return g_records_parsed.load(std::memory_order_relaxed);
}

namespace {

using ordered_json = nlohmann::ordered_json;

ordered_json fold_to_json(const SuffStats& s) {
    ordered_json j;
    j["n"] = s.n;
    j["sum_y"] = s.sum_y;
    j["sum_yy"] = s.sum_yy;
    j["sum_x"] = std::vector<double>(s.sum_x.begin(), s.sum_x.end());
    j["xty"] = std::vector<double>(s.xty.begin(), s.xty.end());
    j["xtx_upper"] = s.xtx_upper;
    return j;
}

SuffStats fold_from_json(const ordered_json& j, Eigen::Index p) {
    SuffStats s(p);
    s.n = j.at("n").get<std::int64_t>();
    s.sum_y = j.at("sum_y").get<double>();
    s.sum_yy = j.at("sum_yy").get<double>();
    const auto sum_x = j.at("sum_x").get<std::vector<double>>();
    const auto xty = j.at("xty").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(sum_x.size()) != p ||
        static_cast<Eigen::Index>(xty.size()) != p) {
        throw IngestError("checkpoint fold has inconsistent dimensions");
    }
    s.sum_x = Eigen::Map<const Eigen::VectorXd>(sum_x.data(), p);
    s.xty = Eigen::Map<const Eigen::VectorXd>(xty.data(), p);
    s.xtx_upper = j.at("xtx_upper").get<std::vector<double>>();
    if (s.xtx_upper.size() != static_cast<std::size_t>(p) * (p + 1) / 2) {
        throw IngestError("checkpoint fold has inconsistent Gram size");
    }
    return s;
}

} // namespace

void save_checkpoint(const std::string& path, const Checkpoint& checkpoint) {
    ordered_json j;
    j["format_version"] = 1;
    j["k"] = checkpoint.folded.k();
    j["p"] = checkpoint.folded.p();
    j["seed"] = checkpoint.seed;
    j["response"] = checkpoint.response_name;
    j["feature_names"] = checkpoint.feature_names;
    j["total_records"] = checkpoint.folded.total_records;
    j["rejected_records"] = checkpoint.folded.rejected_records;
    ordered_json folds = ordered_json::array();
    for (const SuffStats& s : checkpoint.folded.folds) {
        folds.push_back(fold_to_json(s));
    }
    j["folds"] = std::move(folds);

    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IngestError("cannot write checkpoint: " + path);
    }
    out << j.dump(2) << '\n';
    if (!out) {
        throw IngestError("I/O error while writing checkpoint: " + path);
    }
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IngestError("cannot open checkpoint: " + path);
    }
    ordered_json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw IngestError("malformed checkpoint " + path + ": " + e.what());
    }
    if (j.value("format_version", 0) != 1) {
        throw IngestError("unsupported checkpoint format_version in " + path);
    }

    Checkpoint checkpoint;
    checkpoint.seed = j.at("seed").get<std::uint64_t>();
    checkpoint.response_name = j.at("response").get<std::string>();
    checkpoint.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    const auto p = j.at("p").get<Eigen::Index>();
    checkpoint.folded.total_records = j.at("total_records").get<std::int64_t>();
    checkpoint.folded.rejected_records = j.at("rejected_records").get<std::int64_t>();
    for (const auto& fold : j.at("folds")) {
        checkpoint.folded.folds.push_back(fold_from_json(fold, p));
    }
    if (checkpoint.folded.k() != j.at("k").get<int>()) {
        throw IngestError("checkpoint fold count does not match its own header");
    }
    return checkpoint;
}

} // namespace gramnet
