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

#ifndef EQUIAUDIT_TRANSFORM_HPP
#define EQUIAUDIT_TRANSFORM_HPP

#include <cmath>
#include <complex>
#include <optional>
#include <string>
#include <string_view>

/**
 * \file
 * \brief 2x2 real linear maps and their Jordan-form classification.
 *
 * The classification decides whether a linear image transformation can be
 * undone after feature extraction: only maps conjugate to a rotation or to a
 * reflection admit non-trivial invariant compactly supported features.
 */

namespace equiaudit {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  constexpr Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  constexpr Vec2 operator-() const { return {-x, -y}; }
  constexpr Vec2 operator*(double s) const { return {x * s, y * s}; }
  constexpr bool operator==(const Vec2&) const = default;

  double norm() const { return std::hypot(x, y); }
};

/// Matrices with |det| at or below this value are treated as singular.
inline constexpr double kSingularTolerance = 1e-12;

/// The 2x2 matrix (a b; c d) acting on column vectors.
struct LinearMap2 {
  double a = 1.0;
  double b = 0.0;
  double c = 0.0;
  double d = 1.0;

  static constexpr LinearMap2 identity() { return {}; }
  /// Counter-clockwise rotation. Multiples of 90 degrees are exact.
  static LinearMap2 rotation_degrees(double degrees);
  static LinearMap2 rotation_radians(double radians);
  static constexpr LinearMap2 scaling(double sx, double sy) { return {sx, 0.0, 0.0, sy}; }
  /// (1 k; 0 1).
  static constexpr LinearMap2 shear(double k) { return {1.0, k, 0.0, 1.0}; }
  /// Reflection through the line at `axis_degrees` from the x axis.
  static LinearMap2 reflection_degrees(double axis_degrees);

  constexpr double det() const { return a * d - b * c; }
  constexpr double trace() const { return a + d; }

  constexpr Vec2 operator*(Vec2 v) const { return {a * v.x + b * v.y, c * v.x + d * v.y}; }
  /// Composition: (A * B) applies B first.
  constexpr LinearMap2 operator*(const LinearMap2& o) const {
    return {a * o.a + b * o.c, a * o.b + b * o.d, c * o.a + d * o.c, c * o.b + d * o.d};
  }
  constexpr LinearMap2 operator*(double s) const { return {a * s, b * s, c * s, d * s}; }
  constexpr LinearMap2 operator+(const LinearMap2& o) const {
    return {a + o.a, b + o.b, c + o.c, d + o.d};
  }
  constexpr LinearMap2 operator-(const LinearMap2& o) const {
    return {a - o.a, b - o.b, c - o.c, d - o.d};
  }
  constexpr bool operator==(const LinearMap2&) const = default;
};

double det(const LinearMap2& t);
/// Throws SingularMapError when |det| <= kSingularTolerance.
LinearMap2 inverse(const LinearMap2& t);
/// compose(A, B) represents A after B.
LinearMap2 compose(const LinearMap2& a, const LinearMap2& b);
Vec2 matvec(const LinearMap2& t, Vec2 v);

/// Largest singular value, from the closed-form eigenvalues of T^T T.
double operator_norm(const LinearMap2& t);

/// Largest absolute entry of a - b.
double max_abs_difference(const LinearMap2& a, const LinearMap2& b);

/// Condition number in the operator norm.
double condition_number(const LinearMap2& t);

/// T^n by repeated squaring; negative n inverts first.
LinearMap2 iterate(const LinearMap2& t, int n);

struct Eigenvalues {
  std::complex<double> first;
  std::complex<double> second;
  double discriminant = 0.0;  ///< tr^2 - 4 det
};

/// Eigenvalues by the quadratic formula; `first` has the larger modulus.
Eigenvalues eigenvalues(const LinearMap2& t);

enum class TransformKind {
  identity,
  elliptic_finite_order,
  elliptic_infinite,
  parabolic,
  hyperbolic,
  reflection_conjugate,
  contracting_or_expanding,
};

std::string to_string(TransformKind kind);

struct TransformClass {
  TransformKind kind = TransformKind::identity;
  /// Smallest n with T^n = I for finite-order kinds, 0 otherwise.
  int order = 0;
  /// B with B T B^-1 in canonical form.
  std::optional<LinearMap2> conjugator;
  /// B T B^-1 as computed.
  std::optional<LinearMap2> canonical_form;
  /// Rotation angle in (0, pi] for the elliptic kinds.
  std::optional<double> canonical_angle;

  /// "elliptic_finite_order(4)", "parabolic", ...
  std::string label() const;
};

struct ClassifyOptions {
  /// Modulus band around 1 and relative tolerance of the finite-order test.
  double tol = 1e-9;
  /// Largest order searched before reporting elliptic_infinite.
  int n_max = 360;
};

/**
 * Classifies T by its Jordan form.
 *
 * Branch order: identity; |det| != 1 gives contracting_or_expanding; for
 * det = -1 either T^2 = I (reflection_conjugate) or hyperbolic; for det = 1 a
 * positive discriminant is hyperbolic, a vanishing one parabolic (or -I, which
 * is elliptic of order 2) and a negative one elliptic.
 */
TransformClass classify(const LinearMap2& t, const ClassifyOptions& options = {});

enum class InvarianceVerdict { yes_with_invariant_features, no };

std::string to_string(InvarianceVerdict verdict);

/// Yes exactly for identity, elliptic and reflection-conjugate maps.
InvarianceVerdict alignment_admits_invariance(const LinearMap2& t,
                                              const ClassifyOptions& options = {});

/**
 * Parses `rot:<deg>`, `scale:<sx>[,<sy>]`, `shear:<k>`, `reflect:<axis-deg>`,
 * `mat:a,b,c,d` and `conj:<B-spec>:<inner-spec>` (meaning B T B^-1).
 * Throws ParseError on malformed input.
 */
LinearMap2 parse_transform(std::string_view spec);

std::string to_string(const LinearMap2& t);

}  // namespace equiaudit

#endif  // EQUIAUDIT_TRANSFORM_HPP
