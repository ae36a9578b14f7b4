#pragma once

#include "gramnet/trainer.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace gramnet {

/// Everything a saved model carries: the fit itself plus the schema and the
/// ingest/grid provenance needed to reproduce or apply it. Serialized as JSON
/// with sorted keys, so identical artifacts are byte-identical files.
struct ModelArtifact {
    int format_version = 1;
    FittedModel model;
    std::vector<std::string> columns;       // training input columns, file order
    std::vector<std::string> feature_names; // model feature order
    std::string response_name;
    bool intercept_mode = true;

    // ingest summary
    std::int64_t total_records = 0;
    std::int64_t rejected_records = 0;
    std::uint64_t seed = 0;
    int k = 0;

    // grid provenance: enough to regenerate the lambda path without the data
    bool grid_user_supplied = false;
    double grid_lambda_max = 0.0;
    double grid_min_ratio = 0.0;
    int grid_size = 0;
};

const char* family_name(PenaltyFamily family);
PenaltyFamily family_from_name(const std::string& name);

/// Write/read the artifact. Round-trip is byte-stable: save(load(f)) == f.
void save_model(const std::string& path, const ModelArtifact& artifact);
ModelArtifact load_model(const std::string& path);

/// Where each model feature (and the response, when present) sits in a
/// prediction input. With named columns the match is by name and a missing
/// feature raises SchemaError listing it. Headerless inputs are positional:
/// either exactly the model features in model order, or the full training
/// layout (response column included, used for scoring).
struct PredictColumnMap {
    std::vector<int> feature_positions; // one per model feature
    int response_position = -1;
    std::size_t n_columns = 0;
};

PredictColumnMap map_predict_columns(const ModelArtifact& artifact,
                                     const std::vector<std::string>* header_columns,
                                     std::size_t field_count);

} // namespace gramnet
