#pragma once

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "uoi/uoi.hpp"

namespace uoi::cli {

namespace fs = std::filesystem;
using nlohmann::json;

/// Thrown for argument values that parse but make no sense; exit code 2.
struct UsageError : Error {
  using Error::Error;
};

struct FitArgs {
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  std::optional<std::size_t> b1, b2, q;  // unset: the model's default
  double lambda_min_ratio = 1e-3;
  double subsample = 0.8;
  double eval_fraction = 0.2;
  std::size_t lambda_chunks = 1;
  bool no_intercept = false;
  double rho = 1.0, abs_tol = 1e-6, rel_tol = 1e-5, relaxation = 1.0;
  std::size_t max_iter = 5000;
  bool adaptive_rho = false, no_polish = false;
  fs::path output;
};

inline void add_fit_flags(CLI::App& cmd, FitArgs& a) {
  cmd.add_option("--seed", a.seed, "master seed for all bootstrap draws");
  cmd.add_option("--threads", a.threads, "worker threads (0: all hardware threads)");
  cmd.add_option("--b1", a.b1, "selection bootstraps");
  cmd.add_option("--b2", a.b2, "estimation bootstraps");
  cmd.add_option("--q", a.q, "number of lambda values");
  cmd.add_option("--lambda-min-ratio", a.lambda_min_ratio, "smallest lambda as a fraction of lambda_max");
  cmd.add_option("--subsample", a.subsample, "selection resample size as a fraction of n");
  cmd.add_option("--eval-fraction", a.eval_fraction, "held-out fraction in estimation");
  cmd.add_option("--lambda-chunks", a.lambda_chunks, "grid segments solved as separate tasks");
  cmd.add_flag("--no-intercept", a.no_intercept, "fit without an intercept");
  cmd.add_option("--rho", a.rho, "ADMM penalty parameter");
  cmd.add_option("--abs-tol", a.abs_tol, "ADMM absolute tolerance");
  cmd.add_option("--rel-tol", a.rel_tol, "ADMM relative tolerance");
  cmd.add_option("--relaxation", a.relaxation, "ADMM over-relaxation in [1, 2)");
  cmd.add_option("--max-iter", a.max_iter, "ADMM iteration cap");
  cmd.add_flag("--adaptive-rho", a.adaptive_rho, "residual-balancing rho updates");
  cmd.add_flag("--no-polish", a.no_polish, "skip the active-set polishing step");
  cmd.add_option("-o,--output", a.output, "fit file to write")->required();
}

struct ResolvedFit {
  BootstrapPlan plan;
  AdmmSettings admm;
  UoiOptions options;
};

inline ResolvedFit resolve(const FitArgs& a, BootstrapPlan plan, UoiOptions options) {
  ResolvedFit r;
  r.plan = plan;
  r.plan.master_seed = a.seed;
  if (a.b1) r.plan.b1 = *a.b1;
  if (a.b2) r.plan.b2 = *a.b2;
  r.plan.subsample_fraction = a.subsample;
  r.plan.eval_fraction = a.eval_fraction;
  r.options = options;
  if (a.q) r.options.q = *a.q;
  r.options.lambda_min_ratio = a.lambda_min_ratio;
  r.options.intercept = !a.no_intercept;
  r.options.workers = a.threads;
  r.options.lambda_chunks = a.lambda_chunks;
  r.admm.rho = a.rho;
  r.admm.abs_tol = a.abs_tol;
  r.admm.rel_tol = a.rel_tol;
  r.admm.relaxation = a.relaxation;
  r.admm.max_iter = a.max_iter;
  r.admm.adaptive_rho = a.adaptive_rho;
  r.admm.polish = !a.no_polish;
  try {
    r.plan.validate();
    r.options.validate();
    r.admm.validate();
  } catch (const InputError& e) {
    throw UsageError(e.what());
  }
  return r;
}

/// Everything that determines the numbers in a fit; threads and output paths
/// are deliberately left out so that reruns compare equal.
inline json run_echo(const std::string& command, const json& inputs, const ResolvedFit& r) {
  return json{{"command", command},
              {"inputs", inputs},
              {"seed", r.plan.master_seed},
              {"b1", r.plan.b1},
              {"b2", r.plan.b2},
              {"q", r.options.q},
              {"lambda_min_ratio", r.options.lambda_min_ratio},
              {"subsample", r.plan.subsample_fraction},
              {"eval_fraction", r.plan.eval_fraction},
              {"block_len", r.plan.block_len ? json(*r.plan.block_len) : json(nullptr)},
              {"lambda_chunks", r.options.lambda_chunks},
              {"intercept", r.options.intercept},
              {"admm",
               {{"rho", r.admm.rho},
                {"abs_tol", r.admm.abs_tol},
                {"rel_tol", r.admm.rel_tol},
                {"relaxation", r.admm.relaxation},
                {"max_iter", r.admm.max_iter},
                {"adaptive_rho", r.admm.adaptive_rho},
                {"polish", r.admm.polish}}}};
}

inline MatrixFormat parse_format(const std::string& name) {
  if (name == "bin" || name == "binary") return MatrixFormat::binary;
  if (name == "txt" || name == "text" || name == "csv") return MatrixFormat::text;
  throw UsageError("unknown matrix format '" + name + "' (expected bin or txt)");
}

inline fs::path with_ext(const fs::path& dir, const std::string& stem, MatrixFormat f) {
  return dir / (stem + (f == MatrixFormat::binary ? ".bin" : ".txt"));
}

/// A matrix path given directly, or `stem` with either extension inside `dir`.
inline fs::path locate(const fs::path& given, const fs::path& dir, const std::string& stem) {
  if (!given.empty()) return given;
  if (dir.empty()) throw UsageError("no input given for " + stem + " (use --data or a file flag)");
  for (const char* ext : {".bin", ".txt"}) {
    const fs::path p = dir / (stem + ext);
    if (fs::exists(p)) return p;
  }
  throw IoError((dir / (stem + ".bin")).string(), "no such file");
}

inline VectorXd as_vector(const MatrixXd& m, const fs::path& path) {
  if (m.cols() == 1) return m.col(0);
  if (m.rows() == 1) return m.row(0).transpose();
  throw InputError(path.string() + ": expected a vector, got " + std::to_string(m.rows()) + " x " +
                   std::to_string(m.cols()));
}

inline void write_json(const json& j, const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError(path.string(), "cannot open for writing");
  out << j.dump(2) << '\n';
  if (!out) throw IoError(path.string(), "write failed");
}

struct MetricsRow {
  std::string model;
  SupportMetrics support;
  double rel_l2 = std::nan("");
  double r2 = std::nan("");
  double spectral_radius = std::nan("");
};

inline std::string metrics_table(const std::vector<MetricsRow>& rows, bool var) {
  std::ostringstream s;
  s << "model,false_positives,false_negatives,precision,recall,rel_l2_error,r2";
  if (var) s << ",spectral_radius";
  s << '\n' << std::setprecision(10);
  auto num = [&](double v) -> std::ostringstream& {
    if (std::isnan(v)) s << "NA";
    else s << v;
    return s;
  };
  for (const auto& r : rows) {
    s << r.model << ',' << r.support.false_positives << ',' << r.support.false_negatives << ',';
    num(r.support.precision) << ',';
    num(r.support.recall) << ',';
    num(r.rel_l2) << ',';
    num(r.r2);
    if (var) {
      s << ',';
      num(r.spectral_radius);
    }
    s << '\n';
  }
  return s.str();
}

inline double relative_l2(const VectorXd& est, const VectorXd& truth) {
  const double denom = truth.norm();
  return denom > 0.0 ? (est - truth).norm() / denom : est.norm();
}

inline MatrixXd stack_lags(const std::vector<MatrixXd>& A) {
  if (A.empty()) return MatrixXd();
  MatrixXd out(A[0].rows(), A[0].cols() * static_cast<Index>(A.size()));
  for (std::size_t l = 0; l < A.size(); ++l) out.middleCols(static_cast<Index>(l) * A[0].cols(), A[0].cols()) = A[l];
  return out;
}

inline VectorXd flat(const MatrixXd& m) {
  return Eigen::Map<const VectorXd>(m.data(), m.size());
}

/// Parses "a,b,c" into positive integers.
inline std::vector<std::size_t> parse_list(const std::string& text, const char* what) {
  std::vector<std::size_t> out;
  std::stringstream in(text);
  for (std::string item; std::getline(in, item, ',');) {
    try {
      std::size_t used = 0;
      const unsigned long long v = std::stoull(item, &used);
      if (used != item.size() || v == 0) throw std::invalid_argument(item);
      out.push_back(static_cast<std::size_t>(v));
    } catch (const std::exception&) {
      throw UsageError(std::string("bad ") + what + " entry '" + item + "'");
    }
  }
  if (out.empty()) throw UsageError(std::string("empty ") + what + " list");
  return out;
}

/// Runs the command line; returns the process exit code.
/// 0 success, 1 runtime failure (bad data, I/O), 2 usage error.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Union of Intersections sparse regression and VAR estimation"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  // generate-regression
  struct {
    std::size_t n = 0, p = 0, k = 0, holdout = 0;
    double sigma = 1.0, beta_scale = 1.0;
    std::uint64_t seed = 0;
    std::string format = "bin";
    fs::path output;
  } gr;
  auto* gen_reg = app.add_subcommand("generate-regression", "synthetic sparse linear regression data");
  gen_reg->add_option("--n", gr.n, "training rows")->required();
  gen_reg->add_option("--p", gr.p, "features")->required();
  gen_reg->add_option("--k", gr.k, "true nonzero coefficients")->required();
  gen_reg->add_option("--sigma", gr.sigma, "noise standard deviation");
  gen_reg->add_option("--beta-scale", gr.beta_scale, "coefficient magnitude scale");
  gen_reg->add_option("--holdout", gr.holdout, "extra rows written to X_test / y_test");
  gen_reg->add_option("--seed", gr.seed, "generator seed");
  gen_reg->add_option("--format", gr.format, "bin or txt");
  gen_reg->add_option("-o,--output", gr.output, "output directory")->required();

  // generate-var
  struct {
    std::size_t p = 0, order = 1, nnz = 2, n = 2000, burn_in = 500, holdout = 0;
    double radius = 0.9, sigma = 1.0;
    std::uint64_t seed = 0;
    std::string format = "bin";
    fs::path output;
  } gv;
  auto* gen_var = app.add_subcommand("generate-var", "synthetic sparse stable VAR series");
  gen_var->add_option("--p", gv.p, "series dimension")->required();
  gen_var->add_option("--order", gv.order, "lag order d");
  gen_var->add_option("--nnz", gv.nnz, "nonzeros per row of each lag matrix");
  gen_var->add_option("--radius", gv.radius, "target companion spectral radius");
  gen_var->add_option("--n", gv.n, "series length");
  gen_var->add_option("--holdout", gv.holdout, "extra observations written to series_test");
  gen_var->add_option("--burn-in", gv.burn_in, "discarded warm-up steps");
  gen_var->add_option("--sigma", gv.sigma, "noise standard deviation");
  gen_var->add_option("--seed", gv.seed, "generator seed");
  gen_var->add_option("--format", gv.format, "bin or txt");
  gen_var->add_option("-o,--output", gv.output, "output directory")->required();

  // fit-lasso
  FitArgs fl;
  fs::path fl_data, fl_x, fl_y;
  auto* fit_lasso = app.add_subcommand("fit-lasso", "UoI-LASSO fit");
  fit_lasso->add_option("--data", fl_data, "directory holding X and y");
  fit_lasso->add_option("--x", fl_x, "design matrix file");
  fit_lasso->add_option("--y", fl_y, "response file");
  add_fit_flags(*fit_lasso, fl);

  // fit-var
  FitArgs fv;
  fs::path fv_data, fv_series;
  std::size_t fv_order = 1, fv_block_len = 0;
  auto* fit_var = app.add_subcommand("fit-var", "UoI-VAR fit");
  fit_var->add_option("--data", fv_data, "directory holding series");
  fit_var->add_option("--series", fv_series, "series file (rows are time points)");
  fit_var->add_option("--order", fv_order, "lag order d");
  fit_var->add_option("--block-len", fv_block_len, "bootstrap block length (default ceil(sqrt(n)))");
  add_fit_flags(*fit_var, fv);

  // metrics
  fs::path mt_fit, mt_truth, mt_data, mt_x, mt_y, mt_series, mt_train, mt_output;
  std::size_t mt_folds = 5;
  double mt_zero_tol = 0.0;
  auto* metrics = app.add_subcommand("metrics", "compare a fit against ground truth");
  metrics->add_option("--fit", mt_fit, "fit file")->required();
  metrics->add_option("--truth", mt_truth, "true coefficients (beta_true or A_true)")->required();
  metrics->add_option("--data", mt_data, "held-out data directory (X_test/y_test or series_test)");
  metrics->add_option("--x", mt_x, "held-out design");
  metrics->add_option("--y", mt_y, "held-out response");
  metrics->add_option("--series", mt_series, "held-out series for VAR fits");
  metrics->add_option("--baseline-train", mt_train,
                      "training data directory; adds a cross-validated LASSO row");
  metrics->add_option("--folds", mt_folds, "folds for the cross-validated baseline");
  metrics->add_option("--zero-tol", mt_zero_tol, "coefficients at or below this count as zero");
  metrics->add_option("-o,--output", mt_output, "also write the report here");

  // bench
  std::string bn_mode = "strong", bn_threads = "1,2,4,8", bn_splits = "16x2,8x4,4x8,2x16";
  std::size_t bn_rows = 50000, bn_cols = 200, bn_k = 10, bn_b1 = 20, bn_b2 = 20, bn_q = 20;
  double bn_sigma = 1.0, bn_lmr = 1e-3;
  std::uint64_t bn_seed = 0, bn_data_seed = 0;
  bool bn_adaptive = false;
  fs::path bn_work, bn_output;
  auto* bench = app.add_subcommand("bench", "thread-scaling experiment");
  bench->add_option("--mode", bn_mode, "strong, weak or split")
      ->check(CLI::IsMember({"strong", "weak", "split"}));
  bench->add_option("--rows", bn_rows, "rows (weak mode: rows at the first thread count)");
  bench->add_option("--cols", bn_cols, "features");
  bench->add_option("--threads", bn_threads, "comma-separated thread counts");
  bench->add_option("--splits", bn_splits, "split mode: comma-separated PBxPL pairs");
  bench->add_option("--k", bn_k, "true nonzeros in the generated data");
  bench->add_option("--sigma", bn_sigma, "noise standard deviation");
  bench->add_option("--b1", bn_b1, "selection bootstraps");
  bench->add_option("--b2", bn_b2, "estimation bootstraps");
  bench->add_option("--q", bn_q, "number of lambda values");
  bench->add_option("--lambda-min-ratio", bn_lmr, "smallest lambda over lambda_max");
  bench->add_option("--seed", bn_seed, "master bootstrap seed");
  bench->add_option("--data-seed", bn_data_seed, "data generator seed");
  bench->add_flag("--adaptive-rho", bn_adaptive, "residual-balancing rho updates");
  bench->add_option("--work-dir", bn_work, "scratch directory for generated data");
  bench->add_option("-o,--output", bn_output, "report file (appended)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*gen_reg) {
      const MatrixFormat f = parse_format(gr.format);
      auto [problem, truth] =
          generate_regression(gr.n + gr.holdout, gr.p, gr.k, gr.sigma, gr.beta_scale, gr.seed);
      fs::create_directories(gr.output);
      const auto n = static_cast<Index>(gr.n);
      write_matrix(problem.X.topRows(n), with_ext(gr.output, "X", f), f);
      write_matrix(problem.y.head(n), with_ext(gr.output, "y", f), f);
      write_matrix(truth.beta_true, with_ext(gr.output, "beta_true", f), f);
      if (gr.holdout > 0) {
        const auto h = static_cast<Index>(gr.holdout);
        write_matrix(problem.X.bottomRows(h), with_ext(gr.output, "X_test", f), f);
        write_matrix(problem.y.tail(h), with_ext(gr.output, "y_test", f), f);
      }
      write_json({{"command", "generate-regression"},
                  {"n", gr.n},
                  {"p", gr.p},
                  {"k", gr.k},
                  {"sigma", gr.sigma},
                  {"beta_scale", gr.beta_scale},
                  {"holdout", gr.holdout},
                  {"seed", gr.seed},
                  {"support", std::vector<std::size_t>(truth.support_true.begin(),
                                                       truth.support_true.end())}},
                 gr.output / "config.json");
      out << "wrote " << gr.n << " x " << gr.p << " regression data to " << gr.output.string() << '\n';
      return 0;
    }

    if (*gen_var) {
      const MatrixFormat f = parse_format(gv.format);
      VarSpec spec;
      try {
        spec = generate_stable_var(gv.p, gv.order, gv.nnz, gv.radius, gv.seed);
      } catch (const InputError& e) {
        throw UsageError(e.what());
      }
      spec.sigma = MatrixXd::Identity(static_cast<Index>(gv.p), static_cast<Index>(gv.p)) *
                   (gv.sigma * gv.sigma);
      const MatrixXd series =
          simulate_var(spec, gv.n + gv.holdout, gv.burn_in, splitmix64(gv.seed ^ 0x5eedULL));
      fs::create_directories(gv.output);
      write_matrix(series.topRows(static_cast<Index>(gv.n)), with_ext(gv.output, "series", f), f);
      if (gv.holdout > 0) {
        write_matrix(series.bottomRows(static_cast<Index>(gv.holdout)),
                     with_ext(gv.output, "series_test", f), f);
      }
      write_matrix(stack_lags(spec.A), with_ext(gv.output, "A_true", f), f);
      write_matrix(spec.mu, with_ext(gv.output, "mu_true", f), f);
      write_json({{"command", "generate-var"},
                  {"p", gv.p},
                  {"order", gv.order},
                  {"nnz", gv.nnz},
                  {"radius", gv.radius},
                  {"n", gv.n},
                  {"holdout", gv.holdout},
                  {"burn_in", gv.burn_in},
                  {"sigma", gv.sigma},
                  {"seed", gv.seed},
                  {"spectral_radius", check_stability(spec.A).spectral_radius}},
                 gv.output / "config.json");
      out << "wrote VAR(" << gv.order << ") series of length " << gv.n << " to "
          << gv.output.string() << '\n';
      return 0;
    }

    if (*fit_lasso) {
      const ResolvedFit r = resolve(fl, BootstrapPlan{}, UoiOptions{});
      const fs::path xp = locate(fl_x, fl_data, "X");
      const fs::path yp = locate(fl_y, fl_data, "y");
      Stopwatch io;
      RegressionProblem problem;
      problem.X = read_matrix(xp);
      problem.y = as_vector(read_matrix(yp), yp);
      const double io_s = io.seconds();
      check_dimensions(problem.X, problem.y);
      UoiFit fit = fit_uoi_lasso(problem, r.plan, r.admm, r.options);
      fit.timing.selection.data_io_s += io_s;
      fit.timing.selection.total_s += io_s;
      const json echo = run_echo("fit-lasso", {{"x", xp.string()}, {"y", yp.string()}}, r);
      write_fit(fit, fl.output, echo);
      out << "fit-lasso: " << fit.support().size() << " nonzero coefficients; wrote "
          << fl.output.string() << '\n';
      return 0;
    }

    if (*fit_var) {
      ResolvedFit r = resolve(fv, var_default_plan(), var_default_options());
      if (fv_block_len > 0) r.plan.block_len = fv_block_len;
      if (fv_order < 1) throw UsageError("--order must be at least 1");
      const fs::path sp = locate(fv_series, fv_data, "series");
      Stopwatch io;
      const MatrixXd series = read_matrix(sp);
      const double io_s = io.seconds();
      VarFit fit = fit_uoi_var(series, fv_order, r.plan, r.admm, r.options);
      fit.fit.timing.selection.data_io_s += io_s;
      fit.fit.timing.selection.total_s += io_s;
      json echo = run_echo("fit-var", {{"series", sp.string()}}, r);
      echo["order"] = fv_order;
      write_fit(fit, fv.output, echo);
      out << "fit-var: spectral radius " << fit.stability.spectral_radius << "; wrote "
          << fv.output.string() << '\n';
      return 0;
    }

    if (*metrics) {
      const FitRecord record = read_fit(mt_fit);
      const MatrixXd truth = read_matrix(mt_truth);
      std::vector<MetricsRow> rows;
      const bool is_var = std::holds_alternative<VarFit>(record);
      if (!is_var) {
        const UoiFit& fit = std::get<UoiFit>(record);
        const VectorXd beta = as_vector(truth, mt_truth);
        if (beta.size() != fit.beta_star.size()) {
          throw InputError("dimension mismatch: fit has " + std::to_string(fit.beta_star.size()) +
                           " coefficients but " + mt_truth.string() + " has " +
                           std::to_string(beta.size()));
        }
        std::optional<RegressionProblem> test;
        if (!mt_x.empty() || !mt_data.empty()) {
          const fs::path xp = locate(mt_x, mt_data, "X_test");
          const fs::path yp = locate(mt_y, mt_data, "y_test");
          test = RegressionProblem{read_matrix(xp), as_vector(read_matrix(yp), yp), {}};
          check_dimensions(test->X, test->y);
          if (test->cols() != beta.size()) throw InputError("dimension mismatch: held-out X has " + std::to_string(test->cols()) + " columns");
        }
        const SupportSet truth_support = SupportSet::nonzeros(beta, 0.0);
        auto row = [&](const std::string& name, const VectorXd& est, double icpt) {
          MetricsRow m;
          m.model = name;
          m.support = support_metrics(SupportSet::nonzeros(est, mt_zero_tol), truth_support);
          m.rel_l2 = relative_l2(est, beta);
          if (test) {
            VectorXd pred = test->X * est;
            pred.array() += icpt;
            m.r2 = r_squared(test->y, pred);
          }
          return m;
        };
        rows.push_back(row("uoi", fit.beta_star, fit.intercept.size() ? fit.intercept[0] : 0.0));
        if (!mt_train.empty()) {
          const fs::path xp = locate({}, mt_train, "X");
          const fs::path yp = locate({}, mt_train, "y");
          const RegressionProblem train{read_matrix(xp), as_vector(read_matrix(yp), yp), {}};
          const LassoCvFit cv = fit_lasso_cv(train, fit.config.options.q,
                                             fit.config.options.lambda_min_ratio, mt_folds,
                                             fit.config.admm);
          rows.push_back(row("lasso-cv", cv.beta, cv.intercept));
        }
      } else {
        const VarFit& fit = std::get<VarFit>(record);
        const MatrixXd est = stack_lags(fit.A_hat);
        if (truth.rows() != est.rows() || truth.cols() != est.cols()) {
          throw InputError("dimension mismatch: fit has A of shape " + std::to_string(est.rows()) +
                           " x " + std::to_string(est.cols()) + " but " + mt_truth.string() +
                           " is " + std::to_string(truth.rows()) + " x " +
                           std::to_string(truth.cols()));
        }
        std::optional<VarDesign> test;
        if (!mt_series.empty() || !mt_data.empty()) {
          const fs::path sp = locate(mt_series, mt_data, "series_test");
          const MatrixXd s = read_matrix(sp);
          if (s.cols() != truth.rows()) throw InputError("dimension mismatch: held-out series has " + std::to_string(s.cols()) + " columns");
          test = build_var_design(s, fit.d);
        }
        const SupportSet truth_support = SupportSet::nonzeros(flat(truth), 0.0);
        auto row = [&](const std::string& name, const std::vector<MatrixXd>& A, const VectorXd& mu) {
          MetricsRow m;
          m.model = name;
          const MatrixXd stacked = stack_lags(A);
          m.support = support_metrics(SupportSet::nonzeros(flat(stacked), mt_zero_tol), truth_support);
          m.rel_l2 = relative_l2(flat(stacked), flat(truth));
          m.spectral_radius = check_stability(A).spectral_radius;
          if (test) {
            VarFit tmp = fit;
            tmp.A_hat = A;
            tmp.mu_hat = mu;
            const MatrixXd pred = predict(tmp, *test);
            const double sse = (test->Y - pred).squaredNorm();
            const double sst = (test->Y.rowwise() - test->Y.colwise().mean()).squaredNorm();
            m.r2 = sst > 0.0 ? 1.0 - sse / sst : (sse == 0.0 ? 1.0 : 0.0);
          }
          return m;
        };
        rows.push_back(row("uoi", fit.A_hat, fit.mu_hat));
        if (!mt_train.empty()) {
          const fs::path sp = locate({}, mt_train, "series");
          const VarDesign train = build_var_design(read_matrix(sp), fit.d);
          const auto problems = vectorized_problem(train);
          std::vector<MatrixXd> A(fit.d, MatrixXd::Zero(static_cast<Index>(fit.p), static_cast<Index>(fit.p)));
          VectorXd mu(static_cast<Index>(fit.p));
          for (std::size_t c = 0; c < fit.p; ++c) {
            const LassoCvFit cv = fit_lasso_cv(problems[c], fit.fit.config.options.q,
                                               fit.fit.config.options.lambda_min_ratio, mt_folds,
                                               fit.fit.config.admm);
            for (std::size_t l = 0; l < fit.d; ++l)
              for (std::size_t i = 0; i < fit.p; ++i)
                A[l](static_cast<Index>(c), static_cast<Index>(i)) = cv.beta[static_cast<Index>(l * fit.p + i)];
            mu[static_cast<Index>(c)] = cv.intercept;
          }
          rows.push_back(row("lasso-cv", A, mu));
        }
      }
      const std::string report = metrics_table(rows, is_var);
      out << report;
      if (!mt_output.empty()) {
        std::ofstream f(mt_output, std::ios::trunc);
        if (!f || !(f << report)) throw IoError(mt_output.string(), "cannot write report");
      }
      return 0;
    }

    if (*bench) {
      BenchConfig cfg;
      cfg.mode = bn_mode == "weak" ? BenchMode::weak
                 : bn_mode == "split" ? BenchMode::split
                                      : BenchMode::strong;
      cfg.plan.b1 = bn_b1;
      cfg.plan.b2 = bn_b2;
      cfg.plan.master_seed = bn_seed;
      cfg.options.q = bn_q;
      cfg.options.lambda_min_ratio = bn_lmr;
      cfg.admm.adaptive_rho = bn_adaptive;
      cfg.k_nonzero = bn_k;
      cfg.noise_sigma = bn_sigma;
      cfg.data_seed = bn_data_seed;
      cfg.report = bn_output;
      cfg.work_dir = bn_work.empty() ? fs::temp_directory_path() / "uoi-bench" : bn_work;
      try {
        cfg.plan.validate();
        cfg.options.validate();
      } catch (const InputError& e) {
        throw UsageError(e.what());
      }
      if (cfg.mode == BenchMode::split) {
        std::stringstream in(bn_splits);
        for (std::string item; std::getline(in, item, ',');) {
          const auto x = item.find('x');
          if (x == std::string::npos) throw UsageError("split '" + item + "' is not of the form PBxPL");
          const auto pb = parse_list(item.substr(0, x), "split")[0];
          const auto pl = parse_list(item.substr(x + 1), "split")[0];
          if (pl > bn_q) throw UsageError("split '" + item + "': P_lambda exceeds q");
          cfg.runs.push_back({bn_rows, bn_cols, pb * pl, pl});
        }
      } else {
        const auto threads = parse_list(bn_threads, "thread");
        for (auto t : threads) {
          const std::size_t rows = cfg.mode == BenchMode::weak ? bn_rows * t / threads.front() : bn_rows;
          cfg.runs.push_back({rows, bn_cols, t, 1});
        }
      }
      const auto rows = bench_scaling(cfg);
      for (const auto& r : rows) out << detail::csv_line(r) << '\n';
      return 0;
    }
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace uoi::cli
