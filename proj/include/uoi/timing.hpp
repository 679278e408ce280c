#pragma once

#include <chrono>
#include <cstddef>

namespace uoi {

/// Wall time of one pipeline phase split into the categories used by the
/// scaling reports. "reduction" covers intersections, averaging and consensus
/// reductions; "distribution" covers resampling and problem assembly.
struct PhaseTiming {
  double computation_s = 0.0;
  double reduction_s = 0.0;
  double distribution_s = 0.0;
  double data_io_s = 0.0;
  double total_s = 0.0;

  friend bool operator==(const PhaseTiming&, const PhaseTiming&) = default;
};

struct TimingBreakdown {
  PhaseTiming selection;
  PhaseTiming estimation;
  std::size_t workers = 1;

  friend bool operator==(const TimingBreakdown&, const TimingBreakdown&) = default;
};

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }
  void reset() { start_ = std::chrono::steady_clock::now(); }

 private:
  std::chrono::steady_clock::time_point start_;
};

}  // namespace uoi
