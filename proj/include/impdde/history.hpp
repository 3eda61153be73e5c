#pragma once

#include <functional>
#include <utility>

#include "impdde/errors.hpp"
#include "impdde/linalg.hpp"

namespace impdde {

/// A history window: a map s in [-r, 0] -> R^n. Either a view into a
/// trajectory anchored at some time t (values z(t+s)) or a standalone
/// sampled/functional segment (the initial history phi).
class HistorySegment {
 public:
  HistorySegment() = default;
  HistorySegment(double r, std::function<Vec(double)> fn) : r_(r), fn_(std::move(fn)) {}

  double delay() const noexcept { return r_; }

  /// Evaluate at lag s in [-r, 0]. Slightly out-of-range arguments produced
  /// by floating-point time arithmetic are snapped to the boundary.
  Vec operator()(double s) const {
    const double tol = 1e-9 * (r_ + 1.0);
    if (s < -r_ - tol || s > tol) throw DomainError("history argument outside [-r, 0]");
    if (s > 0.0) s = 0.0;
    if (s < -r_) s = -r_;
    return fn_(s);
  }

 private:
  double r_ = 0;
  std::function<Vec(double)> fn_;
};

}  // namespace impdde
