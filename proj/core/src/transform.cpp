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

#include "equiaudit/transform.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "equiaudit/errors.hpp"

namespace equiaudit {

namespace {

// cos/sin of an angle in degrees, exact at multiples of 90.
std::pair<double, double> exact_cos_sin(double degrees) {
  double r = std::fmod(degrees, 360.0);
  if (r < 0.0) r += 360.0;
  if (r == 0.0) return {1.0, 0.0};
  if (r == 90.0) return {0.0, 1.0};
  if (r == 180.0) return {-1.0, 0.0};
  if (r == 270.0) return {0.0, -1.0};
  const double rad = degrees * std::numbers::pi / 180.0;
  return {std::cos(rad), std::sin(rad)};
}

double max_abs_entry(const LinearMap2& t) {
  return std::max({std::abs(t.a), std::abs(t.b), std::abs(t.c), std::abs(t.d)});
}

// Eigenvector of a real eigenvalue, picking the better-conditioned of the two
// closed forms.
Vec2 real_eigenvector(const LinearMap2& t, double lambda) {
  const Vec2 first{lambda - t.d, t.c};
  const Vec2 second{t.b, lambda - t.a};
  const Vec2 v = first.norm() >= second.norm() ? first : second;
  const double n = v.norm();
  if (n == 0.0) return {1.0, 0.0};
  return v * (1.0 / n);
}

LinearMap2 from_columns(Vec2 first, Vec2 second) {
  return {first.x, second.x, first.y, second.y};
}

// Conjugator for a complex pair alpha +- i beta, beta > 0: returns B with
// B T B^-1 = |lambda| rot(theta).
LinearMap2 complex_conjugator(const LinearMap2& t, double alpha, double beta) {
  Vec2 u;
  Vec2 w;
  if (std::abs(t.c) >= std::abs(t.b)) {
    u = {alpha - t.d, t.c};
    w = {beta, 0.0};
  } else {
    u = {t.b, alpha - t.a};
    w = {0.0, beta};
  }
  return inverse(from_columns(u, -w));
}

LinearMap2 real_conjugator(const LinearMap2& t, double l1, double l2) {
  return inverse(from_columns(real_eigenvector(t, l1), real_eigenvector(t, l2)));
}

// B with B T B^-1 = (lambda 1; 0 lambda) for a non-diagonalizable T.
LinearMap2 jordan_conjugator(const LinearMap2& t, double lambda) {
  const LinearMap2 n = t - LinearMap2::identity() * lambda;
  const Vec2 e1{1.0, 0.0};
  const Vec2 e2{0.0, 1.0};
  const Vec2 w = (n * e1).norm() >= (n * e2).norm() ? e1 : e2;
  return inverse(from_columns(n * w, w));
}

void attach_canonical(TransformClass& out, const LinearMap2& t, const LinearMap2& b) {
  out.conjugator = b;
  out.canonical_form = b * t * inverse(b);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      break;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

double parse_number(std::string_view token, std::string_view spec) {
  double value = 0.0;
  const auto* begin = token.data();
  const auto* end = token.data() + token.size();
  if (!token.empty() && *begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (token.empty() || ec != std::errc() || ptr != end || !std::isfinite(value)) {
    throw ParseError("bad number '" + std::string(token) + "' in transform '" +
                     std::string(spec) + "'");
  }
  return value;
}

std::vector<double> parse_numbers(std::string_view token, std::string_view spec) {
  std::vector<double> out;
  for (auto part : split(token, ',')) out.push_back(parse_number(part, spec));
  return out;
}

LinearMap2 parse_at(const std::vector<std::string_view>& tokens, std::size_t& pos,
                    std::string_view spec) {
  if (pos >= tokens.size()) {
    throw ParseError("truncated transform '" + std::string(spec) + "'");
  }
  const std::string_view kind = tokens[pos++];
  if (kind == "conj") {
    const LinearMap2 b = parse_at(tokens, pos, spec);
    const LinearMap2 inner = parse_at(tokens, pos, spec);
    if (std::abs(b.det()) <= kSingularTolerance) {
      throw ParseError("singular conjugator in '" + std::string(spec) + "'");
    }
    return b * inner * inverse(b);
  }
  if (pos >= tokens.size()) {
    throw ParseError("missing argument for '" + std::string(kind) + "' in '" +
                     std::string(spec) + "'");
  }
  const auto args = parse_numbers(tokens[pos++], spec);
  auto expect = [&](std::size_t lo, std::size_t hi) {
    if (args.size() < lo || args.size() > hi) {
      throw ParseError("wrong argument count for '" + std::string(kind) + "' in '" +
                       std::string(spec) + "'");
    }
  };
  if (kind == "rot") {
    expect(1, 1);
    return LinearMap2::rotation_degrees(args[0]);
  }
  if (kind == "scale") {
    expect(1, 2);
    return LinearMap2::scaling(args[0], args.size() == 2 ? args[1] : args[0]);
  }
  if (kind == "shear") {
    expect(1, 1);
    return LinearMap2::shear(args[0]);
  }
  if (kind == "reflect") {
    expect(1, 1);
    return LinearMap2::reflection_degrees(args[0]);
  }
  if (kind == "mat") {
    expect(4, 4);
    return {args[0], args[1], args[2], args[3]};
  }
  throw ParseError("unknown transform kind '" + std::string(kind) + "' in '" +
                   std::string(spec) + "'");
}

std::string shortest(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

LinearMap2 LinearMap2::rotation_degrees(double degrees) {
  const auto [c, s] = exact_cos_sin(degrees);
  return {c, -s, s, c};
}

LinearMap2 LinearMap2::rotation_radians(double radians) {
  const double c = std::cos(radians);
  const double s = std::sin(radians);
  return {c, -s, s, c};
}

LinearMap2 LinearMap2::reflection_degrees(double axis_degrees) {
  const auto [c, s] = exact_cos_sin(2.0 * axis_degrees);
  return {c, s, s, -c};
}

double det(const LinearMap2& t) { return t.det(); }

LinearMap2 inverse(const LinearMap2& t) {
  const double dt = t.det();
  if (!(std::abs(dt) > kSingularTolerance)) {
    throw SingularMapError("linear map " + to_string(t) + " is singular (det = " +
                           shortest(dt) + ")");
  }
  return {t.d / dt, -t.b / dt, -t.c / dt, t.a / dt};
}

LinearMap2 compose(const LinearMap2& a, const LinearMap2& b) { return a * b; }

Vec2 matvec(const LinearMap2& t, Vec2 v) { return t * v; }

double operator_norm(const LinearMap2& t) {
  // T^T T = (p q; q s)
  const double p = t.a * t.a + t.c * t.c;
  const double q = t.a * t.b + t.c * t.d;
  const double s = t.b * t.b + t.d * t.d;
  const double half_sum = 0.5 * (p + s);
  const double half_diff = 0.5 * (p - s);
  const double largest = half_sum + std::sqrt(half_diff * half_diff + q * q);
  return std::sqrt(std::max(largest, 0.0));
}

double max_abs_difference(const LinearMap2& a, const LinearMap2& b) {
  return max_abs_entry(a - b);
}

double condition_number(const LinearMap2& t) {
  return operator_norm(t) * operator_norm(inverse(t));
}

LinearMap2 iterate(const LinearMap2& t, int n) {
  LinearMap2 base = n < 0 ? inverse(t) : t;
  // Avoid overflow of -INT_MIN.
  unsigned long long e = n < 0 ? static_cast<unsigned long long>(-(static_cast<long long>(n)))
                               : static_cast<unsigned long long>(n);
  LinearMap2 result = LinearMap2::identity();
  while (e > 0) {
    if (e & 1ULL) result = result * base;
    e >>= 1ULL;
    if (e > 0) base = base * base;
  }
  return result;
}

Eigenvalues eigenvalues(const LinearMap2& t) {
  const double tr = t.trace();
  const double dt = t.det();
  const double disc = tr * tr - 4.0 * dt;
  Eigenvalues out;
  out.discriminant = disc;
  if (disc >= 0.0) {
    const double sq = std::sqrt(disc);
    // Cancellation-free pair.
    const double big = tr >= 0.0 ? 0.5 * (tr + sq) : 0.5 * (tr - sq);
    const double small = big != 0.0 ? dt / big : 0.0;
    out.first = {big, 0.0};
    out.second = {small, 0.0};
  } else {
    const double re = 0.5 * tr;
    const double im = 0.5 * std::sqrt(-disc);
    out.first = {re, im};
    out.second = {re, -im};
  }
  return out;
}

std::string to_string(TransformKind kind) {
  switch (kind) {
    case TransformKind::identity:
      return "identity";
    case TransformKind::elliptic_finite_order:
      return "elliptic_finite_order";
    case TransformKind::elliptic_infinite:
      return "elliptic_infinite";
    case TransformKind::parabolic:
      return "parabolic";
    case TransformKind::hyperbolic:
      return "hyperbolic";
    case TransformKind::reflection_conjugate:
      return "reflection_conjugate";
    case TransformKind::contracting_or_expanding:
      return "contracting_or_expanding";
  }
  return "unknown";
}

std::string TransformClass::label() const {
  if (kind == TransformKind::elliptic_finite_order) {
    return "elliptic_finite_order(" + std::to_string(order) + ")";
  }
  return to_string(kind);
}

TransformClass classify(const LinearMap2& t, const ClassifyOptions& options) {
  if (!(options.tol > 0.0) || options.n_max < 1) {
    throw PreconditionError("classify requires tol > 0 and n_max >= 1");
  }
  const double tol = options.tol;
  const double scale = std::max(1.0, operator_norm(t));
  const LinearMap2 id = LinearMap2::identity();
  TransformClass out;

  if (max_abs_difference(t, id) <= tol * scale) {
    out.kind = TransformKind::identity;
    out.order = 1;
    attach_canonical(out, t, id);
    return out;
  }

  const double dt = t.det();
  const double tr = t.trace();
  const Eigenvalues ev = eigenvalues(t);
  const double disc = ev.discriminant;
  const double half_tr = 0.5 * tr;
  // Cayley-Hamilton: N^2 = (disc / 4) I for N = T - (tr/2) I. A repeated
  // eigenvalue shows up as |disc| / 4 being negligible against |N|^2.
  const LinearMap2 nil = t - id * half_tr;
  const double nil_norm = operator_norm(nil);
  const bool repeated = std::abs(disc) * 0.25 <= tol * nil_norm * nil_norm ||
                        nil_norm <= tol * scale;

  const bool unimodular = std::abs(std::abs(dt) - 1.0) <= tol;
  if (!unimodular) {
    out.kind = TransformKind::contracting_or_expanding;
    if (std::abs(dt) <= kSingularTolerance) return out;
    if (nil_norm <= tol * scale) {
      attach_canonical(out, t, id);
    } else if (repeated) {
      attach_canonical(out, t, jordan_conjugator(t, half_tr));
    } else if (disc > 0.0) {
      attach_canonical(out, t, real_conjugator(t, ev.first.real(), ev.second.real()));
    } else {
      attach_canonical(out, t, complex_conjugator(t, half_tr, ev.first.imag()));
    }
    return out;
  }

  if (dt < 0.0) {
    // Real eigenvalues lambda and -1/lambda.
    const LinearMap2 sq = t * t;
    if (max_abs_difference(sq, id) <= tol * scale * scale) {
      out.kind = TransformKind::reflection_conjugate;
      out.order = 2;
      attach_canonical(out, t, real_conjugator(t, 1.0, -1.0));
    } else {
      out.kind = TransformKind::hyperbolic;
      attach_canonical(out, t, real_conjugator(t, ev.first.real(), ev.second.real()));
    }
    return out;
  }

  if (repeated) {
    if (max_abs_difference(t, id * -1.0) <= tol * scale) {
      // -I: det = +1 governs, so it is a rotation by pi rather than a reflection.
      out.kind = TransformKind::elliptic_finite_order;
      out.order = 2;
      out.canonical_angle = std::numbers::pi;
      attach_canonical(out, t, id);
    } else {
      out.kind = TransformKind::parabolic;
      attach_canonical(out, t, jordan_conjugator(t, half_tr >= 0.0 ? 1.0 : -1.0));
    }
    return out;
  }

  if (disc > 0.0) {
    out.kind = TransformKind::hyperbolic;
    attach_canonical(out, t, real_conjugator(t, ev.first.real(), ev.second.real()));
    return out;
  }

  const double beta = ev.first.imag();
  out.canonical_angle = std::atan2(beta, half_tr);
  attach_canonical(out, t, complex_conjugator(t, half_tr, beta));
  LinearMap2 power = id;
  for (int n = 1; n <= options.n_max; ++n) {
    power = power * t;
    if (max_abs_difference(power, id) <= tol * scale) {
      out.kind = TransformKind::elliptic_finite_order;
      out.order = n;
      return out;
    }
  }
  out.kind = TransformKind::elliptic_infinite;
  return out;
}

std::string to_string(InvarianceVerdict verdict) {
  return verdict == InvarianceVerdict::yes_with_invariant_features ? "yes_with_invariant_features"
                                                                    : "no";
}

InvarianceVerdict alignment_admits_invariance(const LinearMap2& t, const ClassifyOptions& options) {
  switch (classify(t, options).kind) {
    case TransformKind::identity:
    case TransformKind::elliptic_finite_order:
    case TransformKind::elliptic_infinite:
    case TransformKind::reflection_conjugate:
      return InvarianceVerdict::yes_with_invariant_features;
    default:
      return InvarianceVerdict::no;
  }
}

LinearMap2 parse_transform(std::string_view spec) {
  const auto tokens = split(spec, ':');
  std::size_t pos = 0;
  const LinearMap2 t = parse_at(tokens, pos, spec);
  if (pos != tokens.size()) {
    throw ParseError("trailing tokens in transform '" + std::string(spec) + "'");
  }
  if (!(std::abs(t.det()) > kSingularTolerance)) {
    throw ParseError("transform '" + std::string(spec) + "' is singular");
  }
  return t;
}

std::string to_string(const LinearMap2& t) {
  return "mat:" + shortest(t.a) + "," + shortest(t.b) + "," + shortest(t.c) + "," + shortest(t.d);
}

}  // namespace equiaudit
