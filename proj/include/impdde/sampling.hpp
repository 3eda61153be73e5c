#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "impdde/history.hpp"
#include "impdde/trajectory.hpp"

// Deterministic sampling utilities. Uniform deviates are derived from raw
// engine bits (not std distributions) so identical seeds reproduce identical
// streams across standard libraries. Per-sample generators are seeded from
// the master seed and the sample index, which makes estimates a running max:
// enlarging the sample budget extends the stream instead of reshuffling it.

namespace impdde {

class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0) : eng_(mix(seed, stream)) {}

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  /// Standard normal (Box-Muller; consumes two deviates per pair).
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0) u1 = uniform();
    const double u2 = uniform();
    const double mag = std::sqrt(-2.0 * std::log(u1));
    spare_ = mag * std::sin(6.283185307179586 * u2);
    have_spare_ = true;
    return mag * std::cos(6.283185307179586 * u2);
  }

  /// Uniform in the closed Euclidean ball of the given radius.
  Vec in_ball(std::size_t n, double radius) {
    Vec v(n);
    double norm2 = 0;
    for (std::size_t i = 0; i < n; ++i) {
      v[i] = normal();
      norm2 += v[i] * v[i];
    }
    const double norm = std::sqrt(norm2);
    if (norm == 0) return v;
    const double scale = radius * std::pow(uniform(), 1.0 / static_cast<double>(n)) / norm;
    return v * scale;
  }

 private:
  static std::uint64_t mix(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  std::mt19937_64 eng_;
  bool have_spare_ = false;
  double spare_ = 0;
};

/// Piecewise-linear history on [-r, 0] with equispaced knots. Knot access
/// makes sup norms of samples (and of their differences) exact.
struct PLHistory {
  double r = 0;
  std::vector<Vec> knots;

  static PLHistory random(Rng& rng, double r, std::size_t n, double radius, std::size_t count = 8) {
    PLHistory h;
    h.r = r;
    h.knots.reserve(count);
    for (std::size_t k = 0; k < count; ++k) h.knots.push_back(rng.in_ball(n, radius));
    return h;
  }

  static PLHistory zero(double r, std::size_t n, std::size_t count = 8) {
    PLHistory h;
    h.r = r;
    h.knots.assign(count, Vec(n));
    return h;
  }

  Vec eval(double s) const {
    const std::size_t count = knots.size();
    const double x = (s + r) / r * static_cast<double>(count - 1);
    const std::size_t k = std::min(static_cast<std::size_t>(std::max(0.0, std::floor(x))), count - 2);
    const double w = x - static_cast<double>(k);
    Vec out = (1.0 - w) * knots[k];
    out += w * knots[k + 1];
    return out;
  }

  HistorySegment segment() const {
    return HistorySegment(r, [copy = *this](double s) { return copy.eval(s); });
  }

  double sup_norm() const {
    double m = 0;
    for (const auto& v : knots) m = std::max(m, v.norm());
    return m;
  }

  double sup_diff(const PLHistory& o) const {
    double m = 0;
    for (std::size_t k = 0; k < knots.size(); ++k) m = std::max(m, (knots[k] - o.knots[k]).norm());
    return m;
  }
};

/// Piecewise-linear trajectory over the whole grid domain with knot values
/// uniform in the ball; segment boundaries additionally get independent
/// right values, so the sample exercises jumps. Sup norm <= radius.
inline Trajectory random_disturbance(Rng& rng, const GridPtr& grid, std::size_t n, double radius,
                                     std::size_t knots = 8) {
  std::vector<Vec> values;
  values.reserve(knots);
  for (std::size_t k = 0; k < knots; ++k) values.push_back(rng.in_ball(n, radius));
  const double a = grid->start(), b = grid->end();
  Trajectory out(grid, n);
  for (std::size_t j = 0; j < grid->node_count(); ++j) {
    const double x = (grid->node(j) - a) / (b - a) * static_cast<double>(knots - 1);
    const std::size_t k = std::min(static_cast<std::size_t>(std::max(0.0, std::floor(x))), knots - 2);
    const double w = x - static_cast<double>(k);
    Vec v = (1.0 - w) * values[k];
    v += w * values[k + 1];
    out.set_left(j, std::move(v));
  }
  for (std::size_t bnode : grid->breakpoint_nodes()) out.set_right(bnode, rng.in_ball(n, radius));
  return out;
}

}  // namespace impdde
