// Copyright 2026 The equiaudit Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef EQUIAUDIT_GRID_HPP
#define EQUIAUDIT_GRID_HPP

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "equiaudit/transform.hpp"

/**
 * \file
 * \brief Sampled scalar fields on a centered square lattice.
 *
 * A grid covers [-R, R]^2 with spacing h and an odd number of samples per axis,
 * so the origin is always a sample. Values outside the lattice are zero, and
 * every interpolating read uses bilinear weights in lattice units.
 */

namespace equiaudit {

/// Integer lattice coordinates: physical point = spacing * (x, y).
struct LatticePoint {
  int x = 0;
  int y = 0;
  constexpr bool operator==(const LatticePoint&) const = default;
};

class GridGeometry {
 public:
  /// Throws PreconditionError unless extent > 0 and spacing > 0.
  GridGeometry(double extent, double spacing);

  double extent() const noexcept { return extent_; }
  double spacing() const noexcept { return spacing_; }
  /// k = ceil(R / h); samples run over lattice indices -k..k.
  int half_count() const noexcept { return half_count_; }
  int side() const noexcept { return 2 * half_count_ + 1; }
  std::size_t sample_count() const noexcept {
    return static_cast<std::size_t>(side()) * static_cast<std::size_t>(side());
  }
  /// Physical half-width actually covered by samples, k * h >= R.
  double covered_extent() const noexcept { return half_count_ * spacing_; }

  /// Same spacing and sample count.
  bool same_lattice(const GridGeometry& other) const noexcept;
  bool operator==(const GridGeometry& other) const noexcept { return same_lattice(other); }

  /// Same spacing, extent grown to hold `extent`.
  GridGeometry with_extent(double extent) const { return {extent, spacing_}; }

 private:
  double extent_;
  double spacing_;
  int half_count_;
};

/**
 * Row-major samples, row 0 being the top row (largest y). Cheap to copy
 * conceptually as a value; all operations below are pure functions.
 */
class Grid {
 public:
  explicit Grid(const GridGeometry& geometry);
  Grid(const GridGeometry& geometry, std::vector<double> row_major_values);

  const GridGeometry& geometry() const noexcept { return geometry_; }
  double spacing() const noexcept { return geometry_.spacing(); }
  int half_count() const noexcept { return geometry_.half_count(); }
  int side() const noexcept { return geometry_.side(); }

  bool contains(int x, int y) const noexcept {
    const int k = half_count();
    return x >= -k && x <= k && y >= -k && y <= k;
  }
  bool contains(LatticePoint p) const noexcept { return contains(p.x, p.y); }

  /// Value at a lattice point, 0 outside the grid.
  double value(int x, int y) const noexcept {
    return contains(x, y) ? values_[index(x, y)] : 0.0;
  }
  double value(LatticePoint p) const noexcept { return value(p.x, p.y); }
  /// Unchecked access; the point must be inside the grid.
  double& at(int x, int y) noexcept { return values_[index(x, y)]; }
  double at(int x, int y) const noexcept { return values_[index(x, y)]; }

  Vec2 position(int x, int y) const noexcept { return {x * spacing(), y * spacing()}; }

  /// Bilinear read at fractional lattice coordinates.
  double sample_lattice(double sx, double sy) const noexcept;
  /// Bilinear read at a physical point.
  double sample(Vec2 point) const noexcept {
    return sample_lattice(point.x / spacing(), point.y / spacing());
  }

  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }

  std::size_t index(int x, int y) const noexcept {
    const int k = half_count();
    return static_cast<std::size_t>(k - y) * static_cast<std::size_t>(side()) +
           static_cast<std::size_t>(x + k);
  }

  Grid& operator+=(const Grid& other);
  Grid& operator-=(const Grid& other);
  Grid& operator*=(double s);

 private:
  GridGeometry geometry_;
  std::vector<double> values_;
};

Grid operator+(Grid a, const Grid& b);
Grid operator-(Grid a, const Grid& b);
Grid operator*(Grid a, double s);
Grid operator*(double s, Grid a);

/// A closed-form field that can be rendered at any spacing.
struct AnalyticField {
  std::function<double(Vec2)> fn;
  /// The field vanishes outside the ball of this radius around the origin.
  double support_radius = 0.0;
  std::string name;

  double operator()(Vec2 x) const { return fn(x); }
};

Grid render(const AnalyticField& field, const GridGeometry& geometry);
/// Samples fn at every lattice point, no support check.
Grid render(const std::function<double(Vec2)>& fn, const GridGeometry& geometry);

/// The C-infinity bump profile e * exp(-1 / (1 - s^2)) for |s| < 1, else 0.
double bump_profile(double s) noexcept;

/// Bump of given radius around `center` with value `amplitude` at the center.
AnalyticField bump_field(Vec2 center, double radius, double amplitude = 1.0);

/// Normalized Gaussian of the given mass, truncated at `truncation * sigma`.
AnalyticField gaussian_field(Vec2 center, double sigma, double mass = 1.0,
                             double truncation = 4.0);

/// Renders a bump; throws DomainFitError when the ball leaves [-R, R]^2.
Grid make_bump(Vec2 center, double radius, double amplitude, const GridGeometry& geometry);

/// (T f)(x) = f(T^-1 x) by bilinear interpolation; out-of-domain reads are 0.
Grid resample_affine(const Grid& f, const LinearMap2& t);

/// Bilinear transfer of f onto another lattice (same physical coordinates).
Grid resample_to(const Grid& f, const GridGeometry& geometry);

/// (D_delta f)(x) = f(x - delta); exact sample shift for lattice delta.
Grid translate(const Grid& f, Vec2 delta);
/// Exact shift by a lattice vector.
Grid translate(const Grid& f, LatticePoint delta);

/// True when delta is within 1e-9 of a lattice vector; writes the vector.
bool lattice_vector(Vec2 delta, double spacing, LatticePoint& out) noexcept;

enum class Norm { L1, sup };

std::string to_string(Norm norm);

/// Pairwise summation in the given order.
double pairwise_sum(std::span<const double> values) noexcept;

/// L1 = sum |f - g| h^2 (pairwise, row-major); sup = max |f - g|.
double distance(const Grid& f, const Grid& g, Norm norm);
double norm(const Grid& f, Norm norm);
double integral(const Grid& f);

/// Same as distance(), restricted to lattice points accepted by `mask`.
double distance_masked(const Grid& f, const Grid& g, Norm norm,
                       const std::function<bool(int, int)>& mask);
double norm_masked(const Grid& f, Norm norm, const std::function<bool(int, int)>& mask);

struct SupportEstimate {
  double threshold = 0.0;
  double measure = 0.0;
  double radius = 0.0;
};

/// measure = h^2 #{|f| > threshold}; radius = max |x| over those samples.
SupportEstimate support_estimate(const Grid& f, double threshold);

/// Same extent, spacing / factor, bilinear values. factor >= 2.
Grid refine(const Grid& f, int factor);
/// Re-renders an analytic source at spacing / factor.
Grid refine(const AnalyticField& f, const GridGeometry& coarse, int factor);
/// Keeps every factor-th sample (inverse of refine on the nodes).
Grid subsample(const Grid& f, int factor);

/// Multiplies by the indicator of the closed ball of radius r around 0.
Grid restrict_to_ball(const Grid& f, double radius);

double max_abs(const Grid& f) noexcept;

}  // namespace equiaudit

#endif  // EQUIAUDIT_GRID_HPP
