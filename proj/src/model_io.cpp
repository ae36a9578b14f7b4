#include "gramnet/model_io.hpp"

#include "gramnet/errors.hpp"

#include "json.hpp"

#include <cmath>
#include <fstream>
#include <limits>

namespace gramnet {

namespace {

using json = nlohmann::json;

std::vector<double> to_vec(const Eigen::VectorXd& v) {
    return std::vector<double>(v.begin(), v.end());
}

Eigen::VectorXd from_vec(const std::vector<double>& v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

// NaN cells (skipped CV entries) serialize as null.
json number_or_null(double v) {
    if (std::isfinite(v)) {
        return v;
    }
    return nullptr;
}

double null_to_nan(const json& j) {
    if (j.is_null()) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    return j.get<double>();
}

} // namespace

const char* family_name(PenaltyFamily family) {
    switch (family) {
    case PenaltyFamily::Lasso:
        return "lasso";
    case PenaltyFamily::Ridge:
        return "ridge";
    case PenaltyFamily::ElasticNet:
        return "elastic-net";
    }
    return "lasso";
}

PenaltyFamily family_from_name(const std::string& name) {
    if (name == "lasso") {
        return PenaltyFamily::Lasso;
    }
    if (name == "ridge") {
        return PenaltyFamily::Ridge;
    }
    if (name == "elastic-net" || name == "elastic_net" || name == "enet") {
        return PenaltyFamily::ElasticNet;
    }
    throw std::invalid_argument("unknown penalty family: '" + name + "'");
}

void save_model(const std::string& path, const ModelArtifact& artifact) {
    const FittedModel& m = artifact.model;
    json j;
    j["format_version"] = artifact.format_version;
    j["columns"] = artifact.columns;
    j["feature_names"] = artifact.feature_names;
    j["response"] = artifact.response_name;
    j["intercept_mode"] = artifact.intercept_mode;
    j["intercept"] = m.intercept;
    j["coefficients"] = to_vec(m.coefficients);
    j["lambda_opt"] = m.lambda_opt;
    j["converged"] = m.converged;
    j["insample_mse"] = m.insample_mse;
    j["n"] = m.n;
    j["penalty"] = {{"family", family_name(m.penalty.family)}, {"mix", m.penalty.mix}};
    j["standardization"] = {{"means", to_vec(m.means)}, {"norms", to_vec(m.norms)}};
    j["ingest"] = {{"k", artifact.k},
                   {"records", artifact.total_records},
                   {"rejected", artifact.rejected_records},
                   {"seed", artifact.seed}};
    j["grid"] = {{"count", artifact.grid_size},
                 {"lambda_max", artifact.grid_lambda_max},
                 {"min_ratio", artifact.grid_min_ratio},
                 {"user_supplied", artifact.grid_user_supplied}};

    json cv;
    cv["lambdas"] = m.cv.lambdas;
    cv["lambda_opt"] = m.cv.lambda_opt;
    cv["lambda_opt_index"] = m.cv.lambda_opt_index;
    cv["fold_sizes"] = m.cv.fold_sizes;
    cv["skipped_cells"] = m.cv.skipped_cells;
    json mean = json::array();
    for (Eigen::Index l = 0; l < m.cv.mean_mse.size(); ++l) {
        mean.push_back(number_or_null(m.cv.mean_mse[l]));
    }
    cv["mean_mse"] = std::move(mean);
    json fold_mse = json::array();
    for (Eigen::Index i = 0; i < m.cv.fold_mse.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index l = 0; l < m.cv.fold_mse.cols(); ++l) {
            row.push_back(number_or_null(m.cv.fold_mse(i, l)));
        }
        fold_mse.push_back(std::move(row));
    }
    cv["fold_mse"] = std::move(fold_mse);
    j["cv"] = std::move(cv);

    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IngestError("cannot write model file: " + path);
    }
    out << j.dump(2) << '\n';
    if (!out) {
        throw IngestError("I/O error while writing model file: " + path);
    }
}

ModelArtifact load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IngestError("cannot open model file: " + path);
    }
    json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw IngestError("malformed model file " + path + ": " + e.what());
    }
    if (j.value("format_version", 0) != 1) {
        throw IngestError("unsupported model format_version in " + path);
    }

    ModelArtifact artifact;
    artifact.columns = j.at("columns").get<std::vector<std::string>>();
    artifact.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    artifact.response_name = j.at("response").get<std::string>();
    artifact.intercept_mode = j.at("intercept_mode").get<bool>();

    FittedModel& m = artifact.model;
    m.intercept = j.at("intercept").get<double>();
    m.coefficients = from_vec(j.at("coefficients").get<std::vector<double>>());
    m.lambda_opt = j.at("lambda_opt").get<double>();
    m.converged = j.at("converged").get<bool>();
    m.insample_mse = j.at("insample_mse").get<double>();
    m.n = j.at("n").get<std::int64_t>();
    m.penalty.family = family_from_name(j.at("penalty").at("family").get<std::string>());
    m.penalty.mix = j.at("penalty").at("mix").get<double>();
    m.means = from_vec(j.at("standardization").at("means").get<std::vector<double>>());
    m.norms = from_vec(j.at("standardization").at("norms").get<std::vector<double>>());

    const json& ingest = j.at("ingest");
    artifact.k = ingest.at("k").get<int>();
    artifact.total_records = ingest.at("records").get<std::int64_t>();
    artifact.rejected_records = ingest.at("rejected").get<std::int64_t>();
    artifact.seed = ingest.at("seed").get<std::uint64_t>();

    const json& grid = j.at("grid");
    artifact.grid_size = grid.at("count").get<int>();
    artifact.grid_lambda_max = grid.at("lambda_max").get<double>();
    artifact.grid_min_ratio = grid.at("min_ratio").get<double>();
    artifact.grid_user_supplied = grid.at("user_supplied").get<bool>();

    const json& cv = j.at("cv");
    m.cv.lambdas = cv.at("lambdas").get<std::vector<double>>();
    m.cv.lambda_opt = cv.at("lambda_opt").get<double>();
    m.cv.lambda_opt_index = cv.at("lambda_opt_index").get<int>();
    m.cv.fold_sizes = cv.at("fold_sizes").get<std::vector<std::int64_t>>();
    m.cv.skipped_cells = cv.at("skipped_cells").get<std::int64_t>();
    const json& mean = cv.at("mean_mse");
    m.cv.mean_mse.resize(static_cast<Eigen::Index>(mean.size()));
    for (Eigen::Index l = 0; l < m.cv.mean_mse.size(); ++l) {
        m.cv.mean_mse[l] = null_to_nan(mean[static_cast<std::size_t>(l)]);
    }
    const json& fold_mse = cv.at("fold_mse");
    const auto rows = static_cast<Eigen::Index>(fold_mse.size());
    const auto cols = rows > 0 ? static_cast<Eigen::Index>(fold_mse[0].size())
                               : static_cast<Eigen::Index>(m.cv.lambdas.size());
    m.cv.fold_mse.resize(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index l = 0; l < cols; ++l) {
            m.cv.fold_mse(i, l) = null_to_nan(fold_mse[static_cast<std::size_t>(i)]
                                                      [static_cast<std::size_t>(l)]);
        }
    }
    m.lambda_opt = m.cv.lambda_opt;
    return artifact;
}

PredictColumnMap map_predict_columns(const ModelArtifact& artifact,
                                     const std::vector<std::string>* header_columns,
                                     std::size_t field_count) {
    PredictColumnMap map;
    map.feature_positions.reserve(artifact.feature_names.size());

    if (header_columns != nullptr) {
        map.n_columns = header_columns->size();
        std::vector<std::string> missing;
        for (const std::string& name : artifact.feature_names) {
            int pos = -1;
            for (std::size_t c = 0; c < header_columns->size(); ++c) {
                if ((*header_columns)[c] == name) {
                    pos = static_cast<int>(c);
                    break;
                }
            }
            if (pos < 0) {
                missing.push_back(name);
            } else {
                map.feature_positions.push_back(pos);
            }
        }
        if (!missing.empty()) {
            std::string msg = "input is missing model columns:";
            for (const std::string& name : missing) {
                msg += " '" + name + "'";
            }
            throw SchemaError(msg, std::move(missing));
        }
        for (std::size_t c = 0; c < header_columns->size(); ++c) {
            if ((*header_columns)[c] == artifact.response_name) {
                map.response_position = static_cast<int>(c);
                break;
            }
        }
        return map;
    }

    // Headerless input: positional.
    map.n_columns = field_count;
    const std::size_t p = artifact.feature_names.size();
    if (field_count == p) {
        for (std::size_t f = 0; f < p; ++f) {
            map.feature_positions.push_back(static_cast<int>(f));
        }
        return map;
    }
    if (field_count == artifact.columns.size()) {
        // Same layout as the training files.
        std::vector<std::string> missing;
        for (const std::string& name : artifact.feature_names) {
            int pos = -1;
            for (std::size_t c = 0; c < artifact.columns.size(); ++c) {
                if (artifact.columns[c] == name) {
                    pos = static_cast<int>(c);
                    break;
                }
            }
            if (pos < 0) {
                missing.push_back(name);
            } else {
                map.feature_positions.push_back(pos);
            }
        }
        if (!missing.empty()) {
            throw SchemaError("model columns not present in training layout", std::move(missing));
        }
        for (std::size_t c = 0; c < artifact.columns.size(); ++c) {
            if (artifact.columns[c] == artifact.response_name) {
                map.response_position = static_cast<int>(c);
                break;
            }
        }
        return map;
    }
    throw SchemaError("headerless input has " + std::to_string(field_count) +
                          " columns; expected " + std::to_string(p) + " (features only) or " +
                          std::to_string(artifact.columns.size()) + " (training layout)",
                      artifact.feature_names);
}

} // namespace gramnet
