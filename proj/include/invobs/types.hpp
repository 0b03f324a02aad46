#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace invobs {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using Complex = std::complex<double>;

/// Error categories surfaced by the library. Every throw site uses one of
/// these so callers (and tests) can dispatch on the failure kind.
enum class errc {
  dimension_mismatch,
  unsupported_system,
  not_minimal,
  degenerate_zeros,
  all_zeros_nmp,
  rank_loss,
  not_reconstructible,
  zero_dynamics_contradiction,
  insufficient_data,
  trace_misalignment,
  preview_exhausted,
  norm_undefined,
  invalid_controller,
  improper_chain,
  not_mp_factor,
  bad_config,
  io_failure,
};

class Error : public std::runtime_error {
 public:
  Error(errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  errc code() const noexcept { return code_; }

 private:
  errc code_;
};

[[noreturn]] inline void fail(errc code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, errc code, const std::string& what) {
  if (!cond) fail(code, what);
}

/// Time-indexed sequence of real vectors of one common dimension.
/// Indices are contiguous: sample i carries the absolute time index
/// start_index() + i.
class SignalTrace {
 public:
  SignalTrace() = default;
  explicit SignalTrace(std::int64_t start_index) : start_(start_index) {}
  SignalTrace(std::int64_t start_index, std::vector<Vector> samples)
      : start_(start_index), samples_(std::move(samples)) {
    for (const auto& s : samples_) {
      require(s.size() == samples_.front().size(), errc::dimension_mismatch,
              "SignalTrace samples must share one dimension");
    }
  }

  static SignalTrace zeros(std::int64_t start_index, std::int64_t count, Eigen::Index dim) {
    SignalTrace t(start_index);
    t.samples_.assign(static_cast<std::size_t>(count), Vector::Zero(dim));
    return t;
  }

  void push_back(const Vector& v) {
    require(samples_.empty() || v.size() == dim(), errc::dimension_mismatch,
            "SignalTrace sample dimension changed mid-trace");
    samples_.push_back(v);
  }

  bool empty() const { return samples_.empty(); }
  std::int64_t size() const { return static_cast<std::int64_t>(samples_.size()); }
  Eigen::Index dim() const { return samples_.empty() ? 0 : samples_.front().size(); }

  std::int64_t start_index() const { return start_; }
  std::int64_t end_index() const { return start_ + size() - 1; }  // inclusive
  bool contains(std::int64_t k) const { return k >= start_ && k <= end_index(); }

  /// Access by absolute time index.
  const Vector& at(std::int64_t k) const {
    require(contains(k), errc::trace_misalignment,
            "trace index " + std::to_string(k) + " outside [" + std::to_string(start_) + ", " +
                std::to_string(end_index()) + "]");
    return samples_[static_cast<std::size_t>(k - start_)];
  }

  /// Access by position within the trace.
  const Vector& sample(std::int64_t i) const { return samples_.at(static_cast<std::size_t>(i)); }
  Vector& sample(std::int64_t i) { return samples_.at(static_cast<std::size_t>(i)); }

  const std::vector<Vector>& samples() const { return samples_; }

 private:
  std::int64_t start_ = 0;
  std::vector<Vector> samples_;
};

/// How FIR reconstruction windows are seeded: from zero, or from the
/// previous window's estimate (first window always starts from zero).
enum class InitPolicy { Zero, WarmStart };

/// Numerical knobs shared across the pipeline. Defaults suit desk-scale,
/// well-conditioned problems; everything is config-overridable.
struct Tolerances {
  double rank_tol = 1e-10;         // relative SVD rank threshold
  double unit_circle_tol = 1e-6;   // |.|z|-1| band classified as on the circle
  double residual_tol = 1e-8;      // synthesis residual gate
  int grid_points = 4096;          // frequency grid for infinity norms
};

}  // namespace invobs
