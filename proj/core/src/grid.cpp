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

#include "equiaudit/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <utility>

#include "equiaudit/errors.hpp"

namespace equiaudit {

namespace {

constexpr double kLatticeSnap = 1e-9;

void require_same_lattice(const Grid& f, const Grid& g, const char* what) {
  if (!f.geometry().same_lattice(g.geometry())) {
    std::ostringstream os;
    os << what << ": geometry mismatch (" << f.side() << "x" << f.side() << " @ " << f.spacing()
       << " vs " << g.side() << "x" << g.side() << " @ " << g.spacing() << ")";
    throw GeometryMismatchError(os.str());
  }
}

double pairwise_sum_impl(const double* v, std::size_t n) noexcept {
  if (n <= 16) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += v[i];
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum_impl(v, half) + pairwise_sum_impl(v + half, n - half);
}

}  // namespace

GridGeometry::GridGeometry(double extent, double spacing) : extent_(extent), spacing_(spacing) {
  if (!(extent > 0.0) || !(spacing > 0.0) || !std::isfinite(extent) || !std::isfinite(spacing)) {
    throw PreconditionError("grid geometry needs extent > 0 and spacing > 0");
  }
  const double q = extent / spacing;
  if (q > 1e6) throw PreconditionError("grid geometry too fine");
  half_count_ = std::max(1, static_cast<int>(std::ceil(q - kLatticeSnap * std::max(1.0, q))));
}

bool GridGeometry::same_lattice(const GridGeometry& other) const noexcept {
  return half_count_ == other.half_count_ &&
         std::abs(spacing_ - other.spacing_) <= 1e-12 * std::max(spacing_, other.spacing_);
}

Grid::Grid(const GridGeometry& geometry)
    : geometry_(geometry), values_(geometry.sample_count(), 0.0) {}

Grid::Grid(const GridGeometry& geometry, std::vector<double> row_major_values)
    : geometry_(geometry), values_(std::move(row_major_values)) {
  if (values_.size() != geometry_.sample_count()) {
    throw PreconditionError("grid value count " + std::to_string(values_.size()) +
                            " does not match geometry (" +
                            std::to_string(geometry_.sample_count()) + ")");
  }
}

double Grid::sample_lattice(double sx, double sy) const noexcept {
  const double lim = half_count() + 1.0;
  if (!(std::abs(sx) < lim) || !(std::abs(sy) < lim)) return 0.0;
  const double fx0 = std::floor(sx);
  const double fy0 = std::floor(sy);
  const double fx = sx - fx0;
  const double fy = sy - fy0;
  const int x0 = static_cast<int>(fx0);
  const int y0 = static_cast<int>(fy0);
  if (fx == 0.0 && fy == 0.0) return value(x0, y0);
  if (fy == 0.0) return (1.0 - fx) * value(x0, y0) + fx * value(x0 + 1, y0);
  if (fx == 0.0) return (1.0 - fy) * value(x0, y0) + fy * value(x0, y0 + 1);
  return (1.0 - fx) * (1.0 - fy) * value(x0, y0) + fx * (1.0 - fy) * value(x0 + 1, y0) +
         (1.0 - fx) * fy * value(x0, y0 + 1) + fx * fy * value(x0 + 1, y0 + 1);
}

Grid& Grid::operator+=(const Grid& other) {
  require_same_lattice(*this, other, "grid addition");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
  return *this;
}

Grid& Grid::operator-=(const Grid& other) {
  require_same_lattice(*this, other, "grid subtraction");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= other.values_[i];
  return *this;
}

Grid& Grid::operator*=(double s) {
  for (double& v : values_) v *= s;
  return *this;
}

Grid operator+(Grid a, const Grid& b) { return a += b; }
Grid operator-(Grid a, const Grid& b) { return a -= b; }
Grid operator*(Grid a, double s) { return a *= s; }
Grid operator*(double s, Grid a) { return a *= s; }

Grid render(const AnalyticField& field, const GridGeometry& geometry) {
  Grid out(geometry);
  const double h = geometry.spacing();
  const int k = geometry.half_count();
  const int reach = std::min(k, static_cast<int>(std::ceil(field.support_radius / h)) + 1);
  const double r2 = field.support_radius * field.support_radius;
  for (int y = -reach; y <= reach; ++y) {
    for (int x = -reach; x <= reach; ++x) {
      const Vec2 p{x * h, y * h};
      if (p.x * p.x + p.y * p.y > r2 * (1.0 + 1e-12)) continue;
      out.at(x, y) = field.fn(p);
    }
  }
  return out;
}

Grid render(const std::function<double(Vec2)>& fn, const GridGeometry& geometry) {
  Grid out(geometry);
  const int k = geometry.half_count();
  for (int y = -k; y <= k; ++y) {
    for (int x = -k; x <= k; ++x) out.at(x, y) = fn(out.position(x, y));
  }
  return out;
}

double bump_profile(double s) noexcept {
  const double s2 = s * s;
  if (!(s2 < 1.0)) return 0.0;
  return std::exp(1.0 - 1.0 / (1.0 - s2));
}

AnalyticField bump_field(Vec2 center, double radius, double amplitude) {
  if (!(radius > 0.0)) throw PreconditionError("bump radius must be positive");
  AnalyticField f;
  f.fn = [center, radius, amplitude](Vec2 x) {
    return amplitude * bump_profile((x - center).norm() / radius);
  };
  f.support_radius = center.norm() + radius;
  std::ostringstream os;
  os << "bump(c=(" << center.x << "," << center.y << "),r=" << radius << ",a=" << amplitude
     << ")";
  f.name = os.str();
  return f;
}

AnalyticField gaussian_field(Vec2 center, double sigma, double mass, double truncation) {
  if (!(sigma > 0.0)) throw PreconditionError("gaussian sigma must be positive");
  const double cut = truncation * sigma;
  const double norm = mass / (2.0 * std::numbers::pi * sigma * sigma);
  AnalyticField f;
  f.fn = [center, sigma, cut, norm](Vec2 x) {
    const double r = (x - center).norm();
    if (r > cut) return 0.0;
    return norm * std::exp(-0.5 * r * r / (sigma * sigma));
  };
  f.support_radius = center.norm() + cut;
  std::ostringstream os;
  os << "gaussian(c=(" << center.x << "," << center.y << "),sigma=" << sigma << ")";
  f.name = os.str();
  return f;
}

Grid make_bump(Vec2 center, double radius, double amplitude, const GridGeometry& geometry) {
  if (!(radius > 0.0)) throw PreconditionError("bump radius must be positive");
  const double need = std::max(std::abs(center.x), std::abs(center.y)) + radius;
  if (need > geometry.covered_extent() * (1.0 + 1e-12)) {
    std::ostringstream os;
    os << "bump of radius " << radius << " at (" << center.x << ", " << center.y
       << ") does not fit the domain [-" << geometry.covered_extent() << ", "
       << geometry.covered_extent() << "]^2";
    throw DomainFitError(os.str(), need);
  }
  LatticePoint shift;
  if (lattice_vector(center, geometry.spacing(), shift)) {
    // A lattice center: render the centered bump and move it by whole samples,
    // so bumps that differ by a lattice vector are sample-identical.
    return translate(render(bump_field({0.0, 0.0}, radius, amplitude), geometry), shift);
  }
  return render(bump_field(center, radius, amplitude), geometry);
}

Grid resample_affine(const Grid& f, const LinearMap2& t) {
  const LinearMap2 inv = inverse(t);
  Grid out(f.geometry());
  const int k = f.half_count();
  for (int y = -k; y <= k; ++y) {
    for (int x = -k; x <= k; ++x) {
      const double sx = inv.a * x + inv.b * y;
      const double sy = inv.c * x + inv.d * y;
      out.at(x, y) = f.sample_lattice(sx, sy);
    }
  }
  return out;
}

Grid resample_to(const Grid& f, const GridGeometry& geometry) {
  Grid out(geometry);
  const double ratio = geometry.spacing() / f.spacing();
  const int k = geometry.half_count();
  for (int y = -k; y <= k; ++y) {
    for (int x = -k; x <= k; ++x) out.at(x, y) = f.sample_lattice(x * ratio, y * ratio);
  }
  return out;
}

bool lattice_vector(Vec2 delta, double spacing, LatticePoint& out) noexcept {
  const double qx = delta.x / spacing;
  const double qy = delta.y / spacing;
  const double rx = std::round(qx);
  const double ry = std::round(qy);
  if (std::abs(qx - rx) > kLatticeSnap || std::abs(qy - ry) > kLatticeSnap) return false;
  if (std::abs(rx) > 1e8 || std::abs(ry) > 1e8) return false;
  out = {static_cast<int>(rx), static_cast<int>(ry)};
  return true;
}

Grid translate(const Grid& f, LatticePoint delta) {
  Grid out(f.geometry());
  const int k = f.half_count();
  for (int y = -k; y <= k; ++y) {
    for (int x = -k; x <= k; ++x) out.at(x, y) = f.value(x - delta.x, y - delta.y);
  }
  return out;
}

Grid translate(const Grid& f, Vec2 delta) {
  LatticePoint lattice;
  if (lattice_vector(delta, f.spacing(), lattice)) return translate(f, lattice);
  Grid out(f.geometry());
  const double dx = delta.x / f.spacing();
  const double dy = delta.y / f.spacing();
  const int k = f.half_count();
  for (int y = -k; y <= k; ++y) {
    for (int x = -k; x <= k; ++x) out.at(x, y) = f.sample_lattice(x - dx, y - dy);
  }
  return out;
}

std::string to_string(Norm norm) { return norm == Norm::L1 ? "L1" : "sup"; }

double pairwise_sum(std::span<const double> values) noexcept {
  return pairwise_sum_impl(values.data(), values.size());
}

double distance(const Grid& f, const Grid& g, Norm norm) {
  require_same_lattice(f, g, "distance");
  const auto a = f.values();
  const auto b = g.values();
  if (norm == Norm::sup) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
  }
  std::vector<double> diff(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) diff[i] = std::abs(a[i] - b[i]);
  const double h = f.spacing();
  return pairwise_sum(diff) * h * h;
}

double norm(const Grid& f, Norm norm) {
  const auto a = f.values();
  if (norm == Norm::sup) return max_abs(f);
  std::vector<double> abs(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) abs[i] = std::abs(a[i]);
  const double h = f.spacing();
  return pairwise_sum(abs) * h * h;
}

double integral(const Grid& f) {
  const double h = f.spacing();
  return pairwise_sum(f.values()) * h * h;
}

double distance_masked(const Grid& f, const Grid& g, Norm norm,
                       const std::function<bool(int, int)>& mask) {
  require_same_lattice(f, g, "distance_masked");
  const int k = f.half_count();
  std::vector<double> diff;
  diff.reserve(f.values().size());
  double m = 0.0;
  for (int y = k; y >= -k; --y) {
    for (int x = -k; x <= k; ++x) {
      if (!mask(x, y)) continue;
      const double d = std::abs(f.at(x, y) - g.at(x, y));
      m = std::max(m, d);
      diff.push_back(d);
    }
  }
  if (norm == Norm::sup) return m;
  const double h = f.spacing();
  return pairwise_sum(diff) * h * h;
}

double norm_masked(const Grid& f, Norm norm, const std::function<bool(int, int)>& mask) {
  return distance_masked(f, Grid(f.geometry()), norm, mask);
}

SupportEstimate support_estimate(const Grid& f, double threshold) {
  if (!(threshold >= 0.0)) throw PreconditionError("support threshold must be >= 0");
  SupportEstimate out;
  out.threshold = threshold;
  const int k = f.half_count();
  const double h = f.spacing();
  std::size_t count = 0;
  double r2 = 0.0;
  for (int y = -k; y <= k; ++y) {
    for (int x = -k; x <= k; ++x) {
      if (std::abs(f.at(x, y)) > threshold) {
        ++count;
        r2 = std::max(r2, static_cast<double>(x) * x + static_cast<double>(y) * y);
      }
    }
  }
  out.measure = static_cast<double>(count) * h * h;
  out.radius = std::sqrt(r2) * h;
  return out;
}

namespace {

GridGeometry refined_geometry(const GridGeometry& coarse, int factor) {
  GridGeometry fine(coarse.extent(), coarse.spacing() / factor);
  if (fine.half_count() != coarse.half_count() * factor) {
    fine = GridGeometry(coarse.covered_extent(), coarse.spacing() / factor);
  }
  return fine;
}

}  // namespace

Grid refine(const Grid& f, int factor) {
  if (factor < 2) throw PreconditionError("refine factor must be >= 2");
  const GridGeometry fine = refined_geometry(f.geometry(), factor);
  Grid out(fine);
  const int k = fine.half_count();
  const double inv = 1.0 / factor;
  for (int y = -k; y <= k; ++y) {
    for (int x = -k; x <= k; ++x) {
      const double sx = (x % factor == 0) ? static_cast<double>(x / factor) : x * inv;
      const double sy = (y % factor == 0) ? static_cast<double>(y / factor) : y * inv;
      out.at(x, y) = f.sample_lattice(sx, sy);
    }
  }
  return out;
}

Grid refine(const AnalyticField& f, const GridGeometry& coarse, int factor) {
  if (factor < 2) throw PreconditionError("refine factor must be >= 2");
  return render(f, refined_geometry(coarse, factor));
}

Grid subsample(const Grid& f, int factor) {
  if (factor < 1 || f.half_count() % factor != 0) {
    throw PreconditionError("subsample factor must divide the half sample count");
  }
  const GridGeometry coarse(f.geometry().covered_extent(), f.spacing() * factor);
  Grid out(coarse);
  const int k = coarse.half_count();
  for (int y = -k; y <= k; ++y) {
    for (int x = -k; x <= k; ++x) out.at(x, y) = f.at(x * factor, y * factor);
  }
  return out;
}

Grid restrict_to_ball(const Grid& f, double radius) {
  Grid out = f;
  const int k = f.half_count();
  const double h = f.spacing();
  const double lim = (radius / h) * (radius / h) * (1.0 + 1e-12);
  for (int y = -k; y <= k; ++y) {
    for (int x = -k; x <= k; ++x) {
      if (static_cast<double>(x) * x + static_cast<double>(y) * y > lim) out.at(x, y) = 0.0;
    }
  }
  return out;
}

double max_abs(const Grid& f) noexcept {
  double m = 0.0;
  for (double v : f.values()) m = std::max(m, std::abs(v));
  return m;
}

}  // namespace equiaudit
