#pragma once

#include <nlohmann/json.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "uoi/error.hpp"
#include "uoi/pipeline.hpp"
#include "uoi/var.hpp"

namespace uoi {

/// Fit files are JSON objects:
///
///   {"format": "uoi-fit", "version": 1, "kind": "lasso" | "var", ...}
///
/// Every floating-point value is a C99 hex-float string ("0x1.8p+0") so that
/// reading a file reproduces the written doubles bit for bit. Integer and
/// boolean fields are plain JSON. An optional "run" object carries the
/// command-line echo of the run that produced the fit.
inline constexpr const char* kFitFormat = "uoi-fit";
inline constexpr int kFitVersion = 1;

using FitRecord = std::variant<UoiFit, VarFit>;

namespace fitio {

using nlohmann::json;

inline std::string hex(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

inline double unhex(const json& j) {
  const std::string s = j.get<std::string>();
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') throw FormatError("bad hex-float value '" + s + "'");
  return v;
}

template <class Vec>
json hex_array(const Vec& v) {
  json out = json::array();
  for (Index i = 0; i < static_cast<Index>(v.size()); ++i) out.push_back(hex(v[i]));
  return out;
}

inline VectorXd vector_from(const json& j) {
  VectorXd v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Index>(i)] = unhex(j[i]);
  return v;
}

inline json matrix_rows(const MatrixXd& m) {
  json out = json::array();
  for (Index r = 0; r < m.rows(); ++r) out.push_back(hex_array(m.row(r)));
  return out;
}

inline MatrixXd matrix_from(const json& j, Index cols_if_empty = 0) {
  const auto rows = static_cast<Index>(j.size());
  const Index cols = rows > 0 ? static_cast<Index>(j[0].size()) : cols_if_empty;
  MatrixXd m(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    if (static_cast<Index>(j[static_cast<std::size_t>(r)].size()) != cols) {
      throw FormatError("ragged matrix in fit file");
    }
    for (Index c = 0; c < cols; ++c) {
      m(r, c) = unhex(j[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)]);
    }
  }
  return m;
}

inline json phase_json(const PhaseTiming& t) {
  return {{"computation_s", hex(t.computation_s)},
          {"reduction_s", hex(t.reduction_s)},
          {"distribution_s", hex(t.distribution_s)},
          {"data_io_s", hex(t.data_io_s)},
          {"total_s", hex(t.total_s)}};
}

inline PhaseTiming phase_from(const json& j) {
  PhaseTiming t;
  t.computation_s = unhex(j.at("computation_s"));
  t.reduction_s = unhex(j.at("reduction_s"));
  t.distribution_s = unhex(j.at("distribution_s"));
  t.data_io_s = unhex(j.at("data_io_s"));
  t.total_s = unhex(j.at("total_s"));
  return t;
}

inline json config_json(const FitConfig& c) {
  const auto& p = c.plan;
  const auto& o = c.options;
  const auto& a = c.admm;
  json plan = {{"master_seed", p.master_seed},
               {"b1", p.b1},
               {"b2", p.b2},
               {"subsample_fraction", hex(p.subsample_fraction)},
               {"eval_fraction", hex(p.eval_fraction)},
               {"block_len", p.block_len ? json(*p.block_len) : json(nullptr)}};
  json options = {{"q", o.q},
                  {"lambda_min_ratio", hex(o.lambda_min_ratio)},
                  {"intercept", o.intercept},
                  {"zero_tol", hex(o.zero_tol)},
                  {"lambda_chunks", o.lambda_chunks}};
  json admm = {{"rho", hex(a.rho)},           {"abs_tol", hex(a.abs_tol)},
               {"rel_tol", hex(a.rel_tol)},   {"max_iter", a.max_iter},
               {"relaxation", hex(a.relaxation)}, {"adaptive_rho", a.adaptive_rho},
               {"polish", a.polish}};
  return {{"plan", plan},
          {"options", options},
          {"admm", admm},
          {"resampling", c.resampling},
          {"block_len", c.block_len},
          {"n_samples", c.n_samples},
          {"n_features", c.n_features},
          {"n_responses", c.n_responses}};
}

inline FitConfig config_from(const json& j) {
  FitConfig c;
  const json& plan = j.at("plan");
  c.plan.master_seed = plan.at("master_seed").get<std::uint64_t>();
  c.plan.b1 = plan.at("b1").get<std::size_t>();
  c.plan.b2 = plan.at("b2").get<std::size_t>();
  c.plan.subsample_fraction = unhex(plan.at("subsample_fraction"));
  c.plan.eval_fraction = unhex(plan.at("eval_fraction"));
  if (!plan.at("block_len").is_null()) c.plan.block_len = plan.at("block_len").get<std::size_t>();
  const json& o = j.at("options");
  c.options.q = o.at("q").get<std::size_t>();
  c.options.lambda_min_ratio = unhex(o.at("lambda_min_ratio"));
  c.options.intercept = o.at("intercept").get<bool>();
  c.options.zero_tol = unhex(o.at("zero_tol"));
  c.options.lambda_chunks = o.at("lambda_chunks").get<std::size_t>();
  const json& a = j.at("admm");
  c.admm.rho = unhex(a.at("rho"));
  c.admm.abs_tol = unhex(a.at("abs_tol"));
  c.admm.rel_tol = unhex(a.at("rel_tol"));
  c.admm.max_iter = a.at("max_iter").get<int>();
  c.admm.relaxation = unhex(a.at("relaxation"));
  c.admm.adaptive_rho = a.at("adaptive_rho").get<bool>();
  c.admm.polish = a.at("polish").get<bool>();
  c.resampling = j.at("resampling").get<std::string>();
  c.block_len = j.at("block_len").get<std::size_t>();
  c.n_samples = j.at("n_samples").get<std::size_t>();
  c.n_features = j.at("n_features").get<std::size_t>();
  c.n_responses = j.at("n_responses").get<std::size_t>();
  return c;
}

inline json uoi_json(const UoiFit& fit) {
  json family = json::array();
  for (const auto& s : fit.support_family) {
    family.push_back(std::vector<std::size_t>(s.begin(), s.end()));
  }
  json flagged = json::array();
  for (const auto& [k, j] : fit.diagnostics.flagged_selection) flagged.push_back({k, j});
  const auto& d = fit.diagnostics;
  return {
      {"beta_star", hex_array(fit.beta_star)},
      {"intercept", hex_array(fit.intercept)},
      {"lambda_grid",
       {{"values", hex_array(fit.grid.values)},
        {"lambda_max", hex(fit.grid.lambda_max)},
        {"epsilon", hex(fit.grid.epsilon)}}},
      {"support_family", family},
      {"chosen_index", fit.chosen_index},
      {"chosen_loss", hex_array(fit.chosen_loss)},
      {"losses", matrix_rows(fit.losses)},
      {"diagnostics",
       {{"selection_solves", d.selection_solves},
        {"selection_nonconverged", d.selection_nonconverged},
        {"estimation_solves", d.estimation_solves},
        {"estimation_nonconverged", d.estimation_nonconverged},
        {"flagged_selection", flagged}}},
      {"timing",
       {{"workers", fit.timing.workers},
        {"selection", phase_json(fit.timing.selection)},
        {"estimation", phase_json(fit.timing.estimation)}}},
      {"config", config_json(fit.config)}};
}

inline UoiFit uoi_from(const json& j) {
  UoiFit fit;
  fit.beta_star = vector_from(j.at("beta_star"));
  fit.intercept = vector_from(j.at("intercept"));
  const json& g = j.at("lambda_grid");
  const VectorXd values = vector_from(g.at("values"));
  fit.grid.values.assign(values.data(), values.data() + values.size());
  fit.grid.lambda_max = unhex(g.at("lambda_max"));
  fit.grid.epsilon = unhex(g.at("epsilon"));
  for (const auto& s : j.at("support_family")) {
    fit.support_family.emplace_back(s.get<std::vector<std::size_t>>());
  }
  fit.chosen_index = j.at("chosen_index").get<std::vector<std::size_t>>();
  const VectorXd chosen = vector_from(j.at("chosen_loss"));
  fit.chosen_loss.assign(chosen.data(), chosen.data() + chosen.size());
  fit.losses = matrix_from(j.at("losses"), static_cast<Index>(fit.grid.values.size()));
  const json& d = j.at("diagnostics");
  fit.diagnostics.selection_solves = d.at("selection_solves").get<std::size_t>();
  fit.diagnostics.selection_nonconverged = d.at("selection_nonconverged").get<std::size_t>();
  fit.diagnostics.estimation_solves = d.at("estimation_solves").get<std::size_t>();
  fit.diagnostics.estimation_nonconverged = d.at("estimation_nonconverged").get<std::size_t>();
  for (const auto& f : d.at("flagged_selection")) {
    fit.diagnostics.flagged_selection.emplace_back(f.at(0).get<std::size_t>(),
                                                   f.at(1).get<std::size_t>());
  }
  const json& t = j.at("timing");
  fit.timing.workers = t.at("workers").get<std::size_t>();
  fit.timing.selection = phase_from(t.at("selection"));
  fit.timing.estimation = phase_from(t.at("estimation"));
  fit.config = config_from(j.at("config"));
  fit.config.options.workers = fit.timing.workers;
  return fit;
}

inline json to_json(const UoiFit& fit) {
  json j = {{"format", kFitFormat}, {"version", kFitVersion}, {"kind", "lasso"}};
  j.update(uoi_json(fit));
  return j;
}

inline json to_json(const VarFit& fit) {
  json j = {{"format", kFitFormat}, {"version", kFitVersion}, {"kind", "var"}};
  j.update(uoi_json(fit.fit));
  json lags = json::array();
  for (const auto& a : fit.A_hat) lags.push_back(matrix_rows(a));
  j["var"] = {{"p", fit.p},
              {"d", fit.d},
              {"A_hat", lags},
              {"mu_hat", hex_array(fit.mu_hat)},
              {"spectral_radius", hex(fit.stability.spectral_radius)},
              {"stable", fit.stability.stable}};
  return j;
}

inline FitRecord from_json(const json& j) {
  if (!j.is_object() || !j.contains("format") || j.at("format") != kFitFormat) {
    throw FormatError("not a uoi-fit document");
  }
  const int version = j.at("version").get<int>();
  if (version != kFitVersion) {
    throw VersionError("unsupported fit format version " + std::to_string(version) +
                       " (expected " + std::to_string(kFitVersion) + ")");
  }
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "lasso") return uoi_from(j);
  if (kind != "var") throw FormatError("unknown fit kind '" + kind + "'");
  VarFit out;
  out.fit = uoi_from(j);
  const json& v = j.at("var");
  out.p = v.at("p").get<std::size_t>();
  out.d = v.at("d").get<std::size_t>();
  for (const auto& a : v.at("A_hat")) out.A_hat.push_back(matrix_from(a, static_cast<Index>(out.p)));
  out.mu_hat = vector_from(v.at("mu_hat"));
  out.stability.spectral_radius = unhex(v.at("spectral_radius"));
  out.stability.stable = v.at("stable").get<bool>();
  return out;
}

}  // namespace fitio

/// Writes a fit; `run` (may be null) is stored verbatim under "run".
template <class Fit>
void write_fit(const Fit& fit, const std::filesystem::path& path,
               const nlohmann::json& run = nullptr) {
  nlohmann::json j = fitio::to_json(fit);
  if (!run.is_null()) j["run"] = run;
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError(path.string(), "cannot open for writing");
  out << j.dump(1) << '\n';
  out.flush();
  if (!out) throw IoError(path.string(), "write failed");
}

/// Parses fit JSON text; distinguishes truncated input from other malformed content.
inline FitRecord parse_fit(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    const bool at_end = e.byte >= text.size();
    if (at_end) throw TruncatedError(std::string("fit file ends prematurely: ") + e.what());
    throw FormatError(std::string("fit file is not valid JSON: ") + e.what());
  }
  try {
    return fitio::from_json(j);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("fit file is missing or mistypes a field: ") + e.what());
  }
}

inline FitRecord read_fit(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path.string(), "cannot open for reading");
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse_fit(buf.str());
  } catch (const FormatError& e) {
    // preserve the concrete error type while naming the file
    if (dynamic_cast<const VersionError*>(&e)) throw VersionError(path.string() + ": " + e.what());
    if (dynamic_cast<const TruncatedError*>(&e)) throw TruncatedError(path.string() + ": " + e.what());
    throw FormatError(path.string() + ": " + e.what());
  }
}

/// The "run" object of a fit file, or null.
inline nlohmann::json read_run_echo(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path.string(), "cannot open for reading");
  nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded() || !j.is_object() || !j.contains("run")) return nullptr;
  return j["run"];
}

}  // namespace uoi
