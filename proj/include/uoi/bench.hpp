#pragma once

#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <limits>
#include <new>
#include <string>
#include <thread>
#include <vector>

#include "uoi/error.hpp"
#include "uoi/matrix_io.hpp"
#include "uoi/parallel.hpp"
#include "uoi/pipeline.hpp"
#include "uoi/synthetic.hpp"
#include "uoi/timing.hpp"

namespace uoi {

inline constexpr const char* kBenchHeader =
    "mode,size_rows,size_cols,threads,phase,computation_s,reduction_s,distribution_s,data_io_s,"
    "total_s,speedup,efficiency";

enum class BenchMode { strong, weak, split };

inline const char* to_string(BenchMode m) {
  switch (m) {
    case BenchMode::strong: return "strong";
    case BenchMode::weak: return "weak";
    case BenchMode::split: return "split";
  }
  return "unknown";
}

/// One fit in a scaling experiment. In split mode `lambda_chunks` is P_lambda
/// and threads / lambda_chunks is P_B.
struct BenchRun {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t threads = 1;
  std::size_t lambda_chunks = 1;
};

struct BenchConfig {
  BenchMode mode = BenchMode::strong;
  std::vector<BenchRun> runs;
  BootstrapPlan plan;
  UoiOptions options;
  AdmmSettings admm;
  std::size_t k_nonzero = 10;
  double noise_sigma = 1.0;
  std::uint64_t data_seed = 0;
  std::filesystem::path work_dir;  ///< scratch space for the generated data files
  std::filesystem::path report;    ///< CSV, appended to
  /// Bytes the harness may use; 0 means the currently available physical memory.
  std::uint64_t memory_budget = 0;
};

struct BenchRow {
  BenchMode mode = BenchMode::strong;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t threads = 1;
  std::string phase;  ///< selection | estimation | total | skipped
  PhaseTiming timing;
  double speedup = std::numeric_limits<double>::quiet_NaN();
  double efficiency = std::numeric_limits<double>::quiet_NaN();
};

inline std::uint64_t available_memory_bytes() {
  const long pages = sysconf(_SC_AVPHYS_PAGES);
  const long page = sysconf(_SC_PAGESIZE);
  if (pages <= 0 || page <= 0) return std::numeric_limits<std::uint64_t>::max();
  return static_cast<std::uint64_t>(pages) * static_cast<std::uint64_t>(page);
}

/// Rough peak footprint of one fit: the design plus one resampled, centered
/// copy per concurrent task.
inline std::uint64_t estimated_fit_bytes(const BenchRun& run) {
  const std::uint64_t matrix = static_cast<std::uint64_t>(run.rows) * (run.cols + 1) * 8;
  return matrix * (2 + 2 * static_cast<std::uint64_t>(std::max<std::size_t>(run.threads, 1)));
}

/// Speedup and efficiency against the 1-thread baseline time `t1`.
///   strong, split: speedup = t1 / tk, efficiency = t1 / (k * tk)
///   weak:          efficiency = t1 / tk, speedup = k * t1 / tk
inline void scaling_ratios(BenchMode mode, double t1, std::size_t base_threads, double tk,
                           std::size_t k, double& speedup, double& efficiency) {
  if (!(t1 > 0.0) || !(tk > 0.0)) {
    speedup = efficiency = std::numeric_limits<double>::quiet_NaN();
    return;
  }
  const double ratio = t1 / tk;
  const double scale = static_cast<double>(k) / static_cast<double>(base_threads);
  if (mode == BenchMode::weak) {
    efficiency = ratio;
    speedup = ratio * scale;
  } else {
    speedup = ratio;
    efficiency = ratio / scale;
  }
}

namespace detail {

inline std::string csv_number(double v) {
  if (std::isnan(v)) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

inline std::string csv_line(const BenchRow& r) {
  std::string s = std::string(to_string(r.mode)) + ',' + std::to_string(r.rows) + ',' +
                  std::to_string(r.cols) + ',' + std::to_string(r.threads) + ',' + r.phase;
  for (double v : {r.timing.computation_s, r.timing.reduction_s, r.timing.distribution_s,
                   r.timing.data_io_s, r.timing.total_s, r.speedup, r.efficiency}) {
    s += ',' + csv_number(v);
  }
  return s;
}

inline void append_rows(const std::filesystem::path& path, const std::vector<BenchRow>& rows) {
  std::error_code ec;
  const bool fresh = !std::filesystem::exists(path, ec) || std::filesystem::file_size(path, ec) == 0;
  std::ofstream out(path, std::ios::app);
  if (!out) throw IoError(path.string(), "cannot open report for appending");
  if (fresh) out << "# times in seconds; speedup and efficiency are relative to the first "
                    "run of the same mode and size\n"
                 << kBenchHeader << '\n';
  for (const auto& r : rows) out << csv_line(r) << '\n';
  if (!out) throw IoError(path.string(), "write failed");
}

inline void write_hardware_sidecar(const BenchConfig& cfg) {
  const std::filesystem::path path = cfg.report.string() + ".hardware.txt";
  std::ofstream out(path, std::ios::app);
  if (!out) throw IoError(path.string(), "cannot open for appending");
  const std::time_t now = std::time(nullptr);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  std::string cpu = "unknown";
  std::ifstream info("/proc/cpuinfo");
  for (std::string line; std::getline(info, line);) {
    if (line.rfind("model name", 0) == 0) {
      cpu = line.substr(line.find(':') + 2);
      break;
    }
  }
  out << "[" << stamp << "] mode=" << to_string(cfg.mode)
      << " hardware_threads=" << std::thread::hardware_concurrency() << " cpu=\"" << cpu
      << "\" available_memory_bytes=" << available_memory_bytes() << " b1=" << cfg.plan.b1
      << " b2=" << cfg.plan.b2 << " q=" << cfg.options.q
      << " lambda_min_ratio=" << cfg.options.lambda_min_ratio << " k=" << cfg.k_nonzero
      << " sigma=" << cfg.noise_sigma << " seed=" << cfg.plan.master_seed
      << " data_seed=" << cfg.data_seed << '\n';
}

/// Loads X and y from binary files with one chunk read per worker.
inline RegressionProblem parallel_load(const std::filesystem::path& x_path,
                                       const std::filesystem::path& y_path, std::size_t workers) {
  const MatrixHeader h = read_matrix_header(x_path);
  const std::size_t chunks = std::max<std::size_t>(1, std::min<std::size_t>(resolve_workers(workers), h.rows));
  RegressionProblem out;
  out.X.resize(static_cast<Index>(h.rows), static_cast<Index>(h.cols));
  out.y.resize(static_cast<Index>(h.rows));
  parallel_for(chunks, workers, [&](std::size_t c) {
    const std::uint64_t lo = c * h.rows / chunks;
    const std::uint64_t hi = (c + 1) * h.rows / chunks;
    out.X.middleRows(static_cast<Index>(lo), static_cast<Index>(hi - lo)) = read_chunk(x_path, lo, hi - lo);
    out.y.segment(static_cast<Index>(lo), static_cast<Index>(hi - lo)) = read_chunk(y_path, lo, hi - lo);
  });
  return out;
}

}  // namespace detail

/// Runs every configured fit, appending one row per (run, phase) to the report
/// as soon as the run finishes, and returns the rows written.
///
/// Each size is generated once and stored as binary files under `work_dir`;
/// the timed data I/O is the chunked parallel load of those files and is
/// charged to the selection phase. Runs that would not fit in memory are
/// recorded as "skipped" and the experiment continues.
inline std::vector<BenchRow> bench_scaling(const BenchConfig& cfg) {
  if (cfg.runs.empty()) throw InputError("bench: no runs configured");
  cfg.plan.validate();
  cfg.admm.validate();
  for (const auto& run : cfg.runs) {
    if (run.rows < 2 || run.cols < 1 || run.threads < 1) {
      throw InputError("bench: every run needs rows >= 2, cols >= 1, threads >= 1");
    }
    if (run.lambda_chunks < 1 || run.lambda_chunks > cfg.options.q) {
      throw InputError("bench: lambda chunks must lie in [1, q]");
    }
  }
  UoiOptions base_options = cfg.options;
  base_options.validate();
  std::filesystem::create_directories(cfg.work_dir);
  detail::write_hardware_sidecar(cfg);

  struct Baseline {
    std::size_t rows, cols, threads;
    double selection, estimation, total;
  };
  std::vector<Baseline> baselines;
  const std::uint64_t budget = cfg.memory_budget ? cfg.memory_budget : available_memory_bytes();

  std::vector<BenchRow> all;
  for (const auto& run : cfg.runs) {
    std::vector<BenchRow> rows;
    auto make_row = [&](const char* phase, const PhaseTiming& t) {
      BenchRow r;
      r.mode = cfg.mode;
      r.rows = run.rows;
      r.cols = run.cols;
      r.threads = run.threads;
      r.phase = phase;
      r.timing = t;
      return r;
    };
    bool skipped = estimated_fit_bytes(run) > budget;
    if (!skipped) {
      try {
        const std::string stem = "bench_" + std::to_string(run.rows) + "x" +
                                 std::to_string(run.cols) + "_" + std::to_string(cfg.data_seed);
        const auto x_path = cfg.work_dir / (stem + "_X.bin");
        const auto y_path = cfg.work_dir / (stem + "_y.bin");
        if (!std::filesystem::exists(x_path) || !std::filesystem::exists(y_path)) {
          const auto [problem, truth] =
              generate_regression(run.rows, run.cols, std::min(cfg.k_nonzero, run.cols),
                                  cfg.noise_sigma, 1.0, cfg.data_seed);
          write_matrix(problem.X, x_path, MatrixFormat::binary);
          write_matrix(problem.y, y_path, MatrixFormat::binary);
        }
        Stopwatch io_clock;
        const RegressionProblem problem = detail::parallel_load(x_path, y_path, run.threads);
        const double io_s = io_clock.seconds();

        UoiOptions options = base_options;
        options.workers = run.threads;
        options.lambda_chunks = run.lambda_chunks;
        UoiFit fit = fit_uoi_lasso(problem, cfg.plan, cfg.admm, options);
        fit.timing.selection.data_io_s = io_s;
        fit.timing.selection.total_s += io_s;

        PhaseTiming total;
        for (const PhaseTiming* t : {&fit.timing.selection, &fit.timing.estimation}) {
          total.computation_s += t->computation_s;
          total.reduction_s += t->reduction_s;
          total.distribution_s += t->distribution_s;
          total.data_io_s += t->data_io_s;
          total.total_s += t->total_s;
        }
        rows.push_back(make_row("selection", fit.timing.selection));
        rows.push_back(make_row("estimation", fit.timing.estimation));
        rows.push_back(make_row("total", total));
      } catch (const std::bad_alloc&) {
        skipped = true;
        rows.clear();
      }
    }
    if (skipped) {
      rows = {make_row("skipped", PhaseTiming{})};
      detail::append_rows(cfg.report, rows);
      all.insert(all.end(), rows.begin(), rows.end());
      continue;
    }

    // Strong and split modes compare runs of one size; weak mode compares
    // against the first run regardless of size.
    const Baseline* base = nullptr;
    for (const auto& b : baselines) {
      if (cfg.mode == BenchMode::weak || (b.rows == run.rows && b.cols == run.cols)) {
        base = &b;
        break;
      }
    }
    if (!base) {
      baselines.push_back({run.rows, run.cols, run.threads, rows[0].timing.total_s,
                           rows[1].timing.total_s, rows[2].timing.total_s});
      base = &baselines.back();
    }
    const double t1[3] = {base->selection, base->estimation, base->total};
    for (std::size_t i = 0; i < rows.size(); ++i) {
      scaling_ratios(cfg.mode, t1[i], base->threads, rows[i].timing.total_s, run.threads,
                     rows[i].speedup, rows[i].efficiency);
    }
    detail::append_rows(cfg.report, rows);
    all.insert(all.end(), rows.begin(), rows.end());
  }
  return all;
}

}  // namespace uoi
