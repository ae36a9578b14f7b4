// gramnet command line: train / predict / stats over delimited text files.
//
// Exit codes: 0 success, 2 usage error, 3 ingest failure, 4 solver fault,
// 5 prediction schema mismatch.

#include "gramnet/errors.hpp"
#include "gramnet/ingest.hpp"
#include "gramnet/model_io.hpp"
#include "gramnet/trainer.hpp"

#include "CLI11.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitIngest = 3;
constexpr int kExitSolver = 4;
constexpr int kExitSchema = 5;

struct IngestFlags {
    std::vector<std::string> inputs;
    std::string response;
    std::vector<std::string> features;
    std::string delimiter = ",";
    bool no_header = false;
    int k = 5;
    std::uint64_t seed = 0;
    double rejection_cap = 0.01;
    int threads = 0;
    bool kahan = false;
};

void add_ingest_flags(CLI::App& cmd, IngestFlags& flags, bool fold_flags) {
    cmd.add_option("--input", flags.inputs, "Input file (repeat for shards)");
    cmd.add_option("--response", flags.response, "Response column: name, index, or 'last'");
    cmd.add_option("--features", flags.features, "Feature columns (default: all others)")
        ->delimiter(',');
    cmd.add_option("--delimiter", flags.delimiter, "Field delimiter (default ',')");
    cmd.add_flag("--no-header", flags.no_header, "Inputs have no header line");
    if (fold_flags) {
        cmd.add_option("--k", flags.k, "Cross-validation fold count (default 5)");
        cmd.add_option("--seed", flags.seed, "Fold assignment seed");
    }
    cmd.add_option("--rejection-cap", flags.rejection_cap,
                   "Abort when rejected/total exceeds this (default 0.01)");
    cmd.add_option("--threads", flags.threads, "Worker threads (default: hardware)")
        ->envname("GRAMNET_THREADS");
    cmd.add_flag("--kahan", flags.kahan, "Compensated accumulation");
}

char parse_delimiter(const std::string& flag) {
    if (flag == "\\t" || flag == "tab") {
        return '\t';
    }
    if (flag.size() != 1) {
        throw CLI::ValidationError("--delimiter", "must be a single character (or '\\t')");
    }
    return flag[0];
}

gramnet::IngestConfig to_config(const IngestFlags& flags) {
    gramnet::IngestConfig config;
    config.shards = flags.inputs;
    config.response = flags.response;
    config.features = flags.features;
    config.delimiter = parse_delimiter(flags.delimiter);
    config.has_header = !flags.no_header;
    config.k = flags.k;
    config.seed = flags.seed;
    config.rejection_cap = flags.rejection_cap;
    config.threads = flags.threads;
    config.kahan = flags.kahan;
    return config;
}

void print_warnings(const std::vector<std::string>& warnings, std::int64_t rejected) {
    for (const std::string& w : warnings) {
        std::cerr << "warning: " << w << "\n";
    }
    if (rejected > static_cast<std::int64_t>(warnings.size())) {
        std::cerr << "warning: ... " << rejected - static_cast<std::int64_t>(warnings.size())
                  << " more rejected records\n";
    }
}

std::string format_double(double v) {
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

int run_train(const IngestFlags& flags, const std::string& from_stats, bool k_given,
              const std::string& penalty_name, double mix, bool mix_given,
              const std::vector<double>& lambdas, int n_lambdas, double lambda_min_ratio,
              bool no_intercept, const std::string& output) {
    gramnet::FoldedStats folded;
    std::vector<std::string> feature_names;
    std::string response_name;
    std::vector<std::string> columns;
    std::uint64_t seed = flags.seed;

    if (!from_stats.empty()) {
        if (!flags.inputs.empty()) {
            std::cerr << "error: --from-stats and --input are mutually exclusive\n";
            return kExitUsage;
        }
        gramnet::Checkpoint checkpoint = gramnet::load_checkpoint(from_stats);
        if (k_given && flags.k != checkpoint.folded.k()) {
            std::cerr << "error: checkpoint was built with k = " << checkpoint.folded.k()
                      << " but --k " << flags.k << " was requested\n";
            return kExitUsage;
        }
        folded = std::move(checkpoint.folded);
        feature_names = checkpoint.feature_names;
        response_name = checkpoint.response_name;
        columns = feature_names;
        columns.push_back(response_name);
        seed = checkpoint.seed;
    } else {
        if (flags.inputs.empty() || flags.response.empty()) {
            std::cerr << "error: train needs --input and --response (or --from-stats)\n";
            return kExitUsage;
        }
        gramnet::IngestResult ingested = gramnet::ingest(to_config(flags));
        print_warnings(ingested.warnings, ingested.folded.rejected_records);
        folded = std::move(ingested.folded);
        feature_names = ingested.schema.feature_names();
        response_name = ingested.schema.response_name();
        columns = ingested.schema.columns;
    }

    gramnet::PenaltySpec spec;
    spec.family = gramnet::family_from_name(penalty_name);
    switch (spec.family) {
    case gramnet::PenaltyFamily::Lasso:
        spec.mix = 1.0;
        break;
    case gramnet::PenaltyFamily::Ridge:
        spec.mix = 0.0;
        break;
    case gramnet::PenaltyFamily::ElasticNet:
        spec.mix = mix_given ? mix : 0.5;
        break;
    }
    if (mix_given && spec.family != gramnet::PenaltyFamily::ElasticNet && mix != spec.mix) {
        std::cerr << "error: --mix only applies to --penalty elastic-net\n";
        return kExitUsage;
    }
    if (!lambdas.empty()) {
        spec.lambdas = lambdas;
        std::sort(spec.lambdas.begin(), spec.lambdas.end(), std::greater<>());
        spec.lambdas.erase(std::unique(spec.lambdas.begin(), spec.lambdas.end()),
                           spec.lambdas.end());
        if (spec.lambdas.back() == 0.0) {
            std::cerr << "note: lambda = 0 requested; the unpenalized fit is only "
                         "well-posed when the Gram system is nonsingular\n";
        }
    }
    spec.n_lambdas = n_lambdas;
    spec.lambda_min_ratio = lambda_min_ratio;
    spec.validate();
    if (spec.family == gramnet::PenaltyFamily::Ridge && spec.lambdas.empty()) {
        std::cerr << "note: ridge grid anchored at the lasso lambda_max of the data\n";
    }

    gramnet::TrainOptions options;
    options.intercept = !no_intercept;
    options.threads = flags.threads;

    const gramnet::FittedModel model = gramnet::train(folded, spec, {}, options);

    gramnet::ModelArtifact artifact;
    artifact.model = model;
    artifact.columns = columns;
    artifact.feature_names = feature_names;
    artifact.response_name = response_name;
    artifact.intercept_mode = options.intercept;
    artifact.total_records = folded.total_records;
    artifact.rejected_records = folded.rejected_records;
    artifact.seed = seed;
    artifact.k = folded.k();
    artifact.grid_user_supplied = !spec.lambdas.empty();
    artifact.grid_size = static_cast<int>(model.cv.lambdas.size());
    artifact.grid_lambda_max = model.cv.lambdas.empty() ? 0.0 : model.cv.lambdas.front();
    artifact.grid_min_ratio =
        model.cv.lambdas.empty() || model.cv.lambdas.front() == 0.0
            ? 0.0
            : model.cv.lambdas.back() / model.cv.lambdas.front();
    gramnet::save_model(output, artifact);

    int nonzero = 0;
    for (Eigen::Index j = 0; j < model.coefficients.size(); ++j) {
        nonzero += model.coefficients[j] != 0.0 ? 1 : 0;
    }
    std::cout << "model written to " << output << "\n"
              << "  penalty      " << gramnet::family_name(spec.family)
              << " (mix " << spec.mix << ")\n"
              << "  lambda_opt   " << format_double(model.lambda_opt) << " (grid "
              << model.cv.lambdas.size() << " values, "
              << format_double(artifact.grid_lambda_max) << " .. "
              << format_double(model.cv.lambdas.back()) << ")\n"
              << "  nonzero      " << nonzero << " of " << model.coefficients.size() << "\n"
              << "  cv mse       " << format_double(model.cv.mean_mse[model.cv.lambda_opt_index])
              << " at lambda_opt\n"
              << "  insample mse " << format_double(model.insample_mse) << "\n"
              << "  rows         " << model.n << " (" << folded.rejected_records
              << " rejected)\n";
    if (!model.converged) {
        std::cerr << "warning: final solve did not meet the convergence tolerance\n";
    }
    if (model.cv.skipped_cells > 0) {
        std::cerr << "warning: " << model.cv.skipped_cells
                  << " cross-validation cells were skipped\n";
    }
    return 0;
}

int run_predict(const std::string& model_path, const std::string& input,
                const std::string& output, bool append, const std::string& delimiter,
                bool no_header, double rejection_cap) {
    const char delim = parse_delimiter(delimiter);
    const gramnet::ModelArtifact artifact = gramnet::load_model(model_path);

    std::ifstream in(input, std::ios::binary);
    if (!in) {
        std::cerr << "error: cannot open input file: " << input << "\n";
        return kExitIngest;
    }
    std::ostream* out = &std::cout;
    std::ofstream out_file;
    if (!output.empty()) {
        out_file.open(output, std::ios::binary);
        if (!out_file) {
            std::cerr << "error: cannot write output file: " << output << "\n";
            return kExitIngest;
        }
        out = &out_file;
    }

    std::string line;
    std::vector<std::string_view> fields;
    std::optional<gramnet::PredictColumnMap> map;
    std::vector<std::string> header_columns;
    Eigen::VectorXd x(artifact.feature_names.size());

    std::int64_t total = 0;
    std::int64_t rejected = 0;
    double se_sum = 0.0;
    std::int64_t se_count = 0;
    std::int64_t line_no = 0;
    bool header_pending = !no_header;

    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        if (header_pending) {
            header_pending = false;
            gramnet::split_fields(line, delim, fields);
            for (const auto f : fields) {
                header_columns.emplace_back(f);
            }
            map = gramnet::map_predict_columns(artifact, &header_columns, fields.size());
            continue;
        }
        gramnet::split_fields(line, delim, fields);
        if (!map) {
            map = gramnet::map_predict_columns(artifact, nullptr, fields.size());
        }
        ++total;

        bool ok = fields.size() == map->n_columns;
        double y_obs = 0.0;
        bool have_y = false;
        if (ok) {
            for (std::size_t f = 0; f < map->feature_positions.size() && ok; ++f) {
                const auto pos = static_cast<std::size_t>(map->feature_positions[f]);
                double v = 0.0;
                ok = gramnet::parse_field_double(fields[pos], delim, v) && std::isfinite(v);
                x[static_cast<Eigen::Index>(f)] = v;
            }
            if (ok && map->response_position >= 0) {
                const auto pos = static_cast<std::size_t>(map->response_position);
                have_y = gramnet::parse_field_double(fields[pos], delim, y_obs) &&
                         std::isfinite(y_obs);
            }
        }
        if (!ok) {
            ++rejected;
            if (rejected <= 10) {
                std::cerr << "warning: " << input << ":" << line_no << ": row skipped\n";
            }
            if (append) {
                *out << line << delim << "\n";
            } else {
                *out << "\n";
            }
            continue;
        }
        // Model features are ordered like feature_names; x is already in that order.
        double yhat = artifact.model.intercept;
        for (Eigen::Index f = 0; f < x.size(); ++f) {
            yhat += artifact.model.coefficients[f] * x[f];
        }
        if (append) {
            *out << line << delim << format_double(yhat) << "\n";
        } else {
            *out << format_double(yhat) << "\n";
        }
        if (have_y) {
            const double r = y_obs - yhat;
            se_sum += r * r;
            ++se_count;
        }
    }
    if (in.bad()) {
        std::cerr << "error: I/O failure while reading " << input << "\n";
        return kExitIngest;
    }
    if (se_count > 0) {
        std::cerr << "mse " << format_double(se_sum / static_cast<double>(se_count)) << " over "
                  << se_count << " rows\n";
    }
    if (rejected > 10) {
        std::cerr << "warning: ... " << rejected - 10 << " more rows skipped\n";
    }
    if (total > 0 &&
        static_cast<double>(rejected) > rejection_cap * static_cast<double>(total)) {
        std::cerr << "error: rejected " << rejected << " of " << total
                  << " rows, above the cap of " << rejection_cap << "\n";
        return kExitIngest;
    }
    return 0;
}

int run_stats(const IngestFlags& flags, const std::string& output) {
    if (flags.inputs.empty() || flags.response.empty()) {
        std::cerr << "error: stats needs --input and --response\n";
        return kExitUsage;
    }
    gramnet::IngestResult ingested = gramnet::ingest(to_config(flags));
    print_warnings(ingested.warnings, ingested.folded.rejected_records);

    gramnet::Checkpoint checkpoint;
    checkpoint.folded = std::move(ingested.folded);
    checkpoint.feature_names = ingested.schema.feature_names();
    checkpoint.response_name = ingested.schema.response_name();
    checkpoint.seed = flags.seed;
    gramnet::save_checkpoint(output, checkpoint);

    std::cout << "statistics written to " << output << "\n"
              << "  records  " << checkpoint.folded.total_records << " ("
              << checkpoint.folded.rejected_records << " rejected)\n"
              << "  folds    ";
    for (int i = 0; i < checkpoint.folded.k(); ++i) {
        std::cout << (i > 0 ? " " : "") << checkpoint.folded.folds[static_cast<std::size_t>(i)].n;
    }
    std::cout << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"One-pass penalized linear regression over sharded delimited files"};
    app.require_subcommand(1);

    IngestFlags train_flags;
    std::string from_stats;
    std::string train_penalty = "lasso";
    double mix = 0.5;
    std::vector<double> lambdas;
    int n_lambdas = 100;
    double lambda_min_ratio = 0.0;
    bool no_intercept = false;
    std::string train_output = "model.json";

    CLI::App* train = app.add_subcommand("train", "Fit a model with cross-validated lambda");
    add_ingest_flags(*train, train_flags, true);
    train->add_option("--from-stats", from_stats, "Resume from a statistics checkpoint");
    train->add_option("--penalty", train_penalty, "lasso | ridge | elastic-net (default lasso)");
    CLI::Option* mix_opt = train->add_option("--mix", mix, "Elastic-net lasso fraction in [0, 1]");
    train->add_option("--lambdas", lambdas, "Explicit lambda grid")->delimiter(',');
    train->add_option("--n-lambdas", n_lambdas, "Auto grid size (default 100)");
    train->add_option("--lambda-min-ratio", lambda_min_ratio,
                      "Auto grid floor as a fraction of lambda_max");
    train->add_flag("--no-intercept", no_intercept, "Fit without an intercept");
    train->add_option("--output", train_output, "Model file (default model.json)");

    std::string predict_model;
    std::string predict_input;
    std::string predict_output;
    std::string predict_delimiter = ",";
    bool predict_no_header = false;
    bool predict_append = false;
    double predict_cap = 0.01;

    CLI::App* predict = app.add_subcommand("predict", "Apply a saved model to new rows");
    predict->add_option("--model", predict_model, "Model file")->required();
    predict->add_option("--input", predict_input, "Input file")->required();
    predict->add_option("--output", predict_output, "Predictions file (default stdout)");
    predict->add_option("--delimiter", predict_delimiter, "Field delimiter (default ',')");
    predict->add_flag("--no-header", predict_no_header, "Input has no header line");
    predict->add_flag("--append", predict_append, "Echo each row with the prediction appended");
    predict->add_option("--rejection-cap", predict_cap, "Skipped-row cap (default 0.01)");

    IngestFlags stats_flags;
    std::string stats_output = "stats.json";
    CLI::App* stats = app.add_subcommand("stats", "Write the per-fold statistics checkpoint");
    add_ingest_flags(*stats, stats_flags, true);
    stats->add_option("--output", stats_output, "Checkpoint file (default stats.json)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (train->parsed()) {
            return run_train(train_flags, from_stats, train->count("--k") > 0, train_penalty,
                             mix, mix_opt->count() > 0, lambdas, n_lambdas, lambda_min_ratio,
                             no_intercept, train_output);
        }
        if (predict->parsed()) {
            return run_predict(predict_model, predict_input, predict_output, predict_append,
                               predict_delimiter, predict_no_header, predict_cap);
        }
        if (stats->parsed()) {
            return run_stats(stats_flags, stats_output);
        }
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const gramnet::SchemaError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitSchema;
    } catch (const gramnet::SolverFault& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitSolver;
    } catch (const gramnet::IngestError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIngest;
    } catch (const gramnet::InsufficientDataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIngest;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
