#pragma once

// Independent oracles used only by tests: a dense-grid lower convex hull, a
// brute-force 1D minimizer, and deterministic random fields.

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "pmtv/field.hpp"

namespace oracle {

// Lower convex hull of the graph {(xs[i], ys[i])}, evaluated back at every
// xs[i] by linear interpolation between hull vertices. xs must increase.
inline std::vector<double> lower_convex_hull(const std::vector<double>& xs,
                                             const std::vector<double>& ys) {
  if (xs.size() != ys.size() || xs.size() < 2) {
    throw std::invalid_argument("hull oracle needs matching xs/ys");
  }
  const std::size_t n = xs.size();
  std::vector<std::size_t> hull;
  auto cross = [&](std::size_t o, std::size_t a, std::size_t b) {
    return (xs[a] - xs[o]) * (ys[b] - ys[o]) -
           (ys[a] - ys[o]) * (xs[b] - xs[o]);
  };
  for (std::size_t i = 0; i < n; ++i) {
    while (hull.size() >= 2 &&
           cross(hull[hull.size() - 2], hull[hull.size() - 1], i) <= 0.0) {
      hull.pop_back();
    }
    hull.push_back(i);
  }
  std::vector<double> out(n, 0.0);
  std::size_t seg = 0;
  for (std::size_t i = 0; i < n; ++i) {
    while (seg + 1 < hull.size() - 1 && xs[hull[seg + 1]] <= xs[i]) {
      ++seg;
    }
    const std::size_t a = hull[seg];
    const std::size_t b = hull[seg + 1];
    const double t = (xs[i] - xs[a]) / (xs[b] - xs[a]);
    out[i] = ys[a] + t * (ys[b] - ys[a]);
  }
  return out;
}

// Brute-force minimizer of f over a uniform grid [lo, hi] with the given step.
inline std::pair<double, double> grid_minimize(
    const std::function<double(double)>& f, double lo, double hi, double step) {
  double best_x = lo;
  double best_f = f(lo);
  for (double x = lo + step; x <= hi; x += step) {
    const double v = f(x);
    if (v < best_f) {
      best_f = v;
      best_x = x;
    }
  }
  return {best_x, best_f};
}

// Deterministic uniform doubles in [-amplitude, amplitude] (splitmix64).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}
  double uniform() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    z = z ^ (z >> 31);
    return static_cast<double>(z >> 11) * 0x1.0p-53;
  }
  double symmetric(double amplitude) {
    return amplitude * (2.0 * uniform() - 1.0);
  }

 private:
  std::uint64_t state_;
};

inline pmtv::Field random_field(std::vector<int> shape, double spacing,
                                std::uint64_t seed, double amplitude = 1.0) {
  pmtv::Field u(std::move(shape), spacing, 0.0);
  Rng rng(seed);
  for (int i = 0; i < u.size(); ++i) {
    u[i] = rng.symmetric(amplitude);
  }
  return u;
}

}  // namespace oracle
