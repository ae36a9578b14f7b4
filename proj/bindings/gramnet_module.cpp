// Python bindings for the gramnet core: sufficient statistics, the
// standardized Gram system, the elastic-net path solver and cross-validated
// training, plus array-based conveniences for in-memory data.

#include "gramnet/errors.hpp"
#include "gramnet/ingest.hpp"
#include "gramnet/model_io.hpp"
#include "gramnet/solver.hpp"
#include "gramnet/standardize.hpp"
#include "gramnet/suffstats.hpp"
#include "gramnet/trainer.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>

namespace py = pybind11;
using namespace gramnet;

namespace {

SuffStats stats_from_arrays(const Eigen::Ref<const Eigen::MatrixXd>& X,
                            const Eigen::Ref<const Eigen::VectorXd>& y) {
    if (X.rows() != y.size()) {
        throw std::invalid_argument("X and y row counts differ");
    }
    SuffStats stats(X.cols());
    Sample sample;
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        sample.x = X.row(i);
        sample.y = y[i];
        stats = merge(stats, stats_of_sample(sample));
    }
    return stats;
}

FoldedStats fold_stats_from_arrays(const Eigen::Ref<const Eigen::MatrixXd>& X,
                                   const Eigen::Ref<const Eigen::VectorXd>& y, int k,
                                   std::uint64_t seed) {
    if (X.rows() != y.size()) {
        throw std::invalid_argument("X and y row counts differ");
    }
    if (k < 2) {
        throw std::invalid_argument("k must be >= 2");
    }
    FoldedStats folded;
    folded.folds.assign(static_cast<std::size_t>(k), SuffStats(X.cols()));
    Sample sample;
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        sample.x = X.row(i);
        sample.y = y[i];
        const auto fold = static_cast<std::size_t>(
            assign_fold(static_cast<std::uint64_t>(i), seed, k));
        folded.folds[fold] = merge(folded.folds[fold], stats_of_sample(sample));
        ++folded.total_records;
    }
    return folded;
}

PenaltySpec make_spec(const std::string& penalty, std::optional<double> mix,
                      const std::vector<double>& lambdas, int n_lambdas,
                      double lambda_min_ratio) {
    PenaltySpec spec;
    spec.family = family_from_name(penalty);
    switch (spec.family) {
    case PenaltyFamily::Lasso:
        spec.mix = 1.0;
        break;
    case PenaltyFamily::Ridge:
        spec.mix = 0.0;
        break;
    case PenaltyFamily::ElasticNet:
        spec.mix = mix.value_or(0.5);
        break;
    }
    spec.lambdas = lambdas;
    spec.n_lambdas = n_lambdas;
    spec.lambda_min_ratio = lambda_min_ratio;
    spec.validate();
    return spec;
}

FittedModel fit_arrays(const Eigen::Ref<const Eigen::MatrixXd>& X,
                       const Eigen::Ref<const Eigen::VectorXd>& y, const std::string& penalty,
                       std::optional<double> mix, int k, std::uint64_t seed,
                       const std::vector<double>& lambdas, int n_lambdas,
                       double lambda_min_ratio, bool intercept, int max_sweeps, double tol) {
    const FoldedStats folded = fold_stats_from_arrays(X, y, k, seed);
    const PenaltySpec spec = make_spec(penalty, mix, lambdas, n_lambdas, lambda_min_ratio);
    SolveControl control;
    control.max_sweeps = max_sweeps;
    control.tol = tol;
    TrainOptions options;
    options.intercept = intercept;
    return train(folded, spec, control, options);
}

} // namespace

PYBIND11_MODULE(gramnet, m) {
    m.doc() = "One-pass penalized linear regression on additive sufficient statistics";

    py::register_exception<IncompatibleError>(m, "IncompatibleError", PyExc_ValueError);
    py::register_exception<InsufficientDataError>(m, "InsufficientDataError", PyExc_ValueError);
    py::register_exception<EmptyModelError>(m, "EmptyModelError", PyExc_ValueError);
    py::register_exception<DegenerateGridError>(m, "DegenerateGridError", PyExc_ValueError);
    py::register_exception<IngestError>(m, "IngestError", PyExc_RuntimeError);
    py::register_exception<SolverFault>(m, "SolverFault", PyExc_RuntimeError);
    py::register_exception<SchemaError>(m, "SchemaError", PyExc_ValueError);

    py::class_<SuffStats>(m, "SuffStats")
        .def(py::init<Eigen::Index>(), py::arg("p"))
        .def_readonly("n", &SuffStats::n)
        .def_readonly("sum_y", &SuffStats::sum_y)
        .def_readonly("sum_yy", &SuffStats::sum_yy)
        .def_readonly("sum_x", &SuffStats::sum_x)
        .def_readonly("xty", &SuffStats::xty)
        .def_property_readonly("p", &SuffStats::dim)
        .def("xtx", &SuffStats::xtx_dense)
        .def("y_mean", &SuffStats::y_mean)
        .def("x_mean", &SuffStats::x_mean)
        .def("__repr__", [](const SuffStats& s) {
            return "SuffStats(n=" + std::to_string(s.n) + ", p=" + std::to_string(s.dim()) + ")";
        });

    py::class_<FoldedStats>(m, "FoldedStats")
        .def(py::init<>())
        .def_readonly("folds", &FoldedStats::folds)
        .def_readonly("total_records", &FoldedStats::total_records)
        .def_readonly("rejected_records", &FoldedStats::rejected_records)
        .def_property_readonly("k", &FoldedStats::k)
        .def_property_readonly("p", &FoldedStats::p);

    py::class_<StandardizedProblem>(m, "StandardizedProblem")
        .def_readonly("active", &StandardizedProblem::active)
        .def_readonly("dropped", &StandardizedProblem::dropped)
        .def_readonly("means", &StandardizedProblem::means)
        .def_readonly("norms", &StandardizedProblem::norms)
        .def_readonly("y_bar", &StandardizedProblem::y_bar)
        .def_readonly("g", &StandardizedProblem::g)
        .def_readonly("b", &StandardizedProblem::b)
        .def_readonly("tss", &StandardizedProblem::tss)
        .def_readonly("n", &StandardizedProblem::n)
        .def_readonly("intercept", &StandardizedProblem::intercept)
        .def_property_readonly("p_active", &StandardizedProblem::p_active);

    py::enum_<PenaltyFamily>(m, "PenaltyFamily")
        .value("lasso", PenaltyFamily::Lasso)
        .value("ridge", PenaltyFamily::Ridge)
        .value("elastic_net", PenaltyFamily::ElasticNet);

    py::class_<PenaltySpec>(m, "PenaltySpec")
        .def(py::init(&make_spec), py::arg("penalty") = "lasso", py::arg("mix") = std::nullopt,
             py::arg("lambdas") = std::vector<double>{}, py::arg("n_lambdas") = 100,
             py::arg("lambda_min_ratio") = 0.0)
        .def_readwrite("family", &PenaltySpec::family)
        .def_readwrite("mix", &PenaltySpec::mix)
        .def_readwrite("lambdas", &PenaltySpec::lambdas)
        .def_readwrite("n_lambdas", &PenaltySpec::n_lambdas)
        .def_readwrite("lambda_min_ratio", &PenaltySpec::lambda_min_ratio);

    py::class_<SolveControl>(m, "SolveControl")
        .def(py::init([](int max_sweeps, double tol, bool active_set) {
                 SolveControl c;
                 c.max_sweeps = max_sweeps;
                 c.tol = tol;
                 c.active_set = active_set;
                 return c;
             }),
             py::arg("max_sweeps") = 10000, py::arg("tol") = 1e-9, py::arg("active_set") = true)
        .def_readwrite("max_sweeps", &SolveControl::max_sweeps)
        .def_readwrite("tol", &SolveControl::tol)
        .def_readwrite("active_set", &SolveControl::active_set);

    py::class_<StdSolution>(m, "StdSolution")
        .def_readonly("beta_std", &StdSolution::beta_std)
        .def_readonly("lambda_", &StdSolution::lambda)
        .def_readonly("sweeps_used", &StdSolution::sweeps_used)
        .def_readonly("converged", &StdSolution::converged)
        .def_readonly("faulted", &StdSolution::faulted)
        .def_readonly("kkt_residual", &StdSolution::kkt_residual);

    py::class_<TrainOptions>(m, "TrainOptions")
        .def(py::init([](bool intercept, double epsilon, int threads, bool skip_last_fold) {
                 TrainOptions o;
                 o.intercept = intercept;
                 o.epsilon = epsilon;
                 o.threads = threads;
                 o.skip_last_fold = skip_last_fold;
                 return o;
             }),
             py::arg("intercept") = true, py::arg("epsilon") = 1e-12, py::arg("threads") = 0,
             py::arg("skip_last_fold") = false)
        .def_readwrite("intercept", &TrainOptions::intercept)
        .def_readwrite("epsilon", &TrainOptions::epsilon)
        .def_readwrite("threads", &TrainOptions::threads)
        .def_readwrite("skip_last_fold", &TrainOptions::skip_last_fold);

    py::class_<CvReport>(m, "CvReport")
        .def_readonly("lambdas", &CvReport::lambdas)
        .def_readonly("fold_mse", &CvReport::fold_mse)
        .def_readonly("mean_mse", &CvReport::mean_mse)
        .def_readonly("lambda_opt", &CvReport::lambda_opt)
        .def_readonly("lambda_opt_index", &CvReport::lambda_opt_index)
        .def_readonly("fold_sizes", &CvReport::fold_sizes)
        .def_readonly("skipped_cells", &CvReport::skipped_cells);

    py::class_<FittedModel>(m, "FittedModel")
        .def_readonly("intercept", &FittedModel::intercept)
        .def_readonly("coefficients", &FittedModel::coefficients)
        .def_readonly("lambda_opt", &FittedModel::lambda_opt)
        .def_readonly("cv", &FittedModel::cv)
        .def_readonly("means", &FittedModel::means)
        .def_readonly("norms", &FittedModel::norms)
        .def_readonly("converged", &FittedModel::converged)
        .def_readonly("insample_mse", &FittedModel::insample_mse)
        .def_readonly("n", &FittedModel::n)
        .def("predict", &FittedModel::predict, py::arg("x"))
        .def("__repr__", [](const FittedModel& f) {
            return "FittedModel(p=" + std::to_string(f.coefficients.size()) +
                   ", lambda_opt=" + std::to_string(f.lambda_opt) + ")";
        });

    py::class_<IngestConfig>(m, "IngestConfig")
        .def(py::init<>())
        .def_readwrite("k", &IngestConfig::k)
        .def_readwrite("seed", &IngestConfig::seed)
        .def_readwrite("response", &IngestConfig::response)
        .def_readwrite("features", &IngestConfig::features)
        .def_property(
            "delimiter", [](const IngestConfig& c) { return std::string(1, c.delimiter); },
            [](IngestConfig& c, const std::string& d) {
                if (d.size() != 1) {
                    throw std::invalid_argument("delimiter must be a single character");
                }
                c.delimiter = d[0];
            })
        .def_readwrite("has_header", &IngestConfig::has_header)
        .def_readwrite("shards", &IngestConfig::shards)
        .def_readwrite("rejection_cap", &IngestConfig::rejection_cap)
        .def_readwrite("threads", &IngestConfig::threads)
        .def_readwrite("kahan", &IngestConfig::kahan);

    py::class_<IngestResult>(m, "IngestResult")
        .def_readonly("folded", &IngestResult::folded)
        .def_readonly("warnings", &IngestResult::warnings)
        .def_property_readonly("feature_names",
                               [](const IngestResult& r) { return r.schema.feature_names(); })
        .def_property_readonly("response_name",
                               [](const IngestResult& r) { return r.schema.response_name(); });

    // statistics
    m.def("stats_of_sample",
          [](const Eigen::VectorXd& x, double y) { return stats_of_sample({x, y}); },
          py::arg("x"), py::arg("y"));
    m.def("stats_from_arrays", &stats_from_arrays, py::arg("X"), py::arg("y"));
    m.def("merge", &merge, py::arg("a"), py::arg("b"));
    m.def("fold_stats_from_arrays", &fold_stats_from_arrays, py::arg("X"), py::arg("y"),
          py::arg("k"), py::arg("seed") = 0);
    m.def("assign_fold", &assign_fold, py::arg("ordinal"), py::arg("seed"), py::arg("k"));

    // standardized Gram system
    m.def("standardize", &standardize, py::arg("stats"), py::arg("intercept") = true,
          py::arg("epsilon") = 1e-12);
    m.def("loss_from_stats", &loss_from_stats, py::arg("problem"), py::arg("beta_std"));

    // solver
    m.def("penalty_value", &penalty_value, py::arg("spec"), py::arg("lambda_"), py::arg("beta"));
    m.def("lambda_max", &lambda_max, py::arg("problem"), py::arg("spec"));
    m.def("make_lambda_grid", &make_lambda_grid, py::arg("problem"), py::arg("spec"));
    m.def("coordinate_descent",
          [](const StandardizedProblem& problem, const PenaltySpec& spec, double lambda,
             std::optional<Eigen::VectorXd> warm_start, const SolveControl& control) {
              if (warm_start) {
                  return coordinate_descent(problem, spec, lambda, *warm_start, control);
              }
              return coordinate_descent(problem, spec, lambda, control);
          },
          py::arg("problem"), py::arg("spec"), py::arg("lambda_"),
          py::arg("warm_start") = std::nullopt, py::arg("control") = SolveControl{});
    m.def("solve_path", &solve_path, py::arg("problem"), py::arg("spec"),
          py::arg("control") = SolveControl{});
    m.def("ridge_closed_form", &ridge_closed_form, py::arg("problem"), py::arg("lambda_"));

    // cross-validated training
    m.def("fold_complement", &fold_complement, py::arg("folds"), py::arg("i"));
    m.def("test_mse_from_stats",
          py::overload_cast<const SuffStats&, double, const Eigen::VectorXd&>(
              &test_mse_from_stats),
          py::arg("test"), py::arg("alpha"), py::arg("beta"));
    m.def("back_transform", &back_transform, py::arg("beta_std"), py::arg("problem"));
    m.def("cross_validate", &cross_validate, py::arg("folds"), py::arg("spec"),
          py::arg("control") = SolveControl{}, py::arg("options") = TrainOptions{});
    m.def("train", &train, py::arg("folds"), py::arg("spec"),
          py::arg("control") = SolveControl{}, py::arg("options") = TrainOptions{});
    m.def("fit", &fit_arrays, py::arg("X"), py::arg("y"), py::arg("penalty") = "lasso",
          py::arg("mix") = std::nullopt, py::arg("k") = 5, py::arg("seed") = 0,
          py::arg("lambdas") = std::vector<double>{}, py::arg("n_lambdas") = 100,
          py::arg("lambda_min_ratio") = 0.0, py::arg("intercept") = true,
          py::arg("max_sweeps") = 10000, py::arg("tol") = 1e-9,
          "Fold the rows by the seeded hash, cross-validate lambda and fit on all rows");

    // file pipeline
    m.def("ingest", &ingest, py::arg("config"));
    m.def("records_parsed_total", &records_parsed_total);
}
