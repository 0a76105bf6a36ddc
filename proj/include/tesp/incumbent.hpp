#pragma once

#include <chrono>
#include <cmath>
#include <limits>
#include <mutex>
#include <string>
#include <vector>

#include "tesp/model.hpp"

namespace tesp {

struct TracePoint {
  double time_s = 0.0;
  double incumbent = std::numeric_limits<double>::infinity();
  double lower_bound = 0.0;
  std::string source;
};

// Best-known feasible plan shared between the scout and the workers.
// offer() keeps the trace of improvements; lower-bound reports are folded
// into the same stream and clamped monotone.
class Incumbent {
 public:
  using Clock = std::chrono::steady_clock;

  explicit Incumbent(Clock::time_point start = Clock::now()) : start_(start) {}

  bool offer(const PlanVector& plan, double value, const std::string& source) {
    std::lock_guard lock(mu_);
    if (value >= best_ - 1e-12 * (1.0 + std::fabs(best_))) return false;
    best_ = value;
    plan_ = plan;
    trace_.push_back({elapsed(), best_, lb_, source});
    return true;
  }

  void report_lower_bound(double lb, const std::string& source) {
    std::lock_guard lock(mu_);
    if (lb <= lb_ + 1e-12 * (1.0 + std::fabs(lb_))) return;
    lb_ = lb;
    trace_.push_back({elapsed(), best_, lb_, source});
  }

  bool has_value() const {
    std::lock_guard lock(mu_);
    return best_ < std::numeric_limits<double>::infinity();
  }
  double value() const {
    std::lock_guard lock(mu_);
    return best_;
  }
  PlanVector plan() const {
    std::lock_guard lock(mu_);
    return plan_;
  }
  double lower_bound() const {
    std::lock_guard lock(mu_);
    return lb_;
  }
  std::vector<TracePoint> trace() const {
    std::lock_guard lock(mu_);
    return trace_;
  }
  double seconds_since_start() const {
    std::lock_guard lock(mu_);
    return elapsed();
  }

 private:
  double elapsed() const {
    return std::chrono::duration<double>(Clock::now() - start_).count();
  }

  mutable std::mutex mu_;
  Clock::time_point start_;
  double best_ = std::numeric_limits<double>::infinity();
  double lb_ = 0.0;
  PlanVector plan_;
  std::vector<TracePoint> trace_;
};

}  // namespace tesp
