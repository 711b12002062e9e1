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

#ifndef EQUIAUDIT_GENERATOR_HPP
#define EQUIAUDIT_GENERATOR_HPP

#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "equiaudit/conv.hpp"
#include "equiaudit/grid.hpp"
#include "equiaudit/transform.hpp"

/**
 * \file
 * \brief Translation-covariant operators through their value at the origin.
 *
 * A translation-covariant operator is determined by the functional
 * mu(f) = (Lambda f)(0); conversely (Lambda f)(x) = mu(D_{-x} f).
 */

namespace equiaudit {

/// A deterministic, reentrant map Grid -> Grid with optional fast point access.
class OperatorHandle {
 public:
  using Apply = std::function<Grid(const Grid&)>;
  using PointEval = std::function<double(const Grid&, LatticePoint)>;

  OperatorHandle(std::string name, Apply apply, PointEval point = {},
                 std::optional<double> declared_radius = std::nullopt);

  const std::string& name() const noexcept { return name_; }
  std::optional<double> declared_radius() const noexcept { return declared_radius_; }
  bool has_point_eval() const noexcept { return static_cast<bool>(point_); }

  Grid apply(const Grid& f) const { return apply_(f); }
  Grid operator()(const Grid& f) const { return apply_(f); }
  /// (Lambda f)(p); falls back to apply() when there is no point evaluator.
  double at(const Grid& f, LatticePoint p) const;
  /// Bilinear read of Lambda f at fractional lattice coordinates.
  double at_lattice(const Grid& f, double sx, double sy) const;

 private:
  std::string name_;
  Apply apply_;
  PointEval point_;
  std::optional<double> declared_radius_;
};

OperatorHandle identity_operator();
OperatorHandle constant_operator(double value);
OperatorHandle convolution_operator(Filter lambda);
/// Channel `channel` after `depth` layers of the model.
OperatorHandle cnn_operator(std::shared_ptr<const CnnModel> model, std::size_t depth,
                            std::size_t channel);
OperatorHandle cnn_operator(const CnnModel& model, std::size_t depth, std::size_t channel);
/// Every output sample is the mean of the whole input (not semi-local).
OperatorHandle global_average_operator();

/// T^-1 o Lambda o T: warp the input by T, apply Lambda, warp back.
OperatorHandle conjugate_operator(const OperatorHandle& inner, const LinearMap2& t);

/// mu(f) = (Lambda f)(0). Throws DomainFitError when the declared radius does
/// not fit inside f's domain.
double generator_eval(const OperatorHandle& op, const Grid& f);

using Generator = std::function<double(const Grid&)>;

/// (Lambda f)(x) = mu(D_{-x} f) at every lattice point.
OperatorHandle operator_from_generator(Generator mu, std::string name = "from_generator");

/// The inverse construction: f -> generator_eval(op, f).
Generator generator_of(const OperatorHandle& op);

struct SemilocalOptions {
  /// Randomized outside-perturbations per probe.
  int perturbations = 32;
  std::uint64_t seed = 0;
  /// Perturbation amplitude relative to the probe's sup norm (1 if the probe is zero).
  double amplitude = 1.0;
  double tol = 1e-12;
};

struct SemilocalEstimate {
  static constexpr double kNotSemilocal = std::numeric_limits<double>::infinity();
  /// Smallest passing radius or kNotSemilocal.
  double radius = kNotSemilocal;
  std::vector<double> radii;
  /// max |Lambda f1(0) - Lambda f2(0)| per tested radius.
  std::vector<double> max_deviation;
  std::uint64_t seed = 0;
  int perturbations = 0;

  bool found() const noexcept { return radius != kNotSemilocal; }
};

/**
 * Smallest tested radius r such that perturbing each probe only outside the
 * closed r-ball leaves (Lambda f)(0) unchanged within tol. Radii must be
 * ascending and inside the probes' domain.
 */
SemilocalEstimate estimate_semilocal_radius(const OperatorHandle& op,
                                            const std::vector<Grid>& probes,
                                            const std::vector<double>& radii,
                                            const SemilocalOptions& options = {});

struct NonconstantCertificate {
  std::size_t index = 0;
  double mu_f = 0.0;
  double mu_zero = 0.0;
  double separation = 0.0;
};

/// First corpus element with |mu(f) - mu(0)| > tol; mu(0) is evaluated on a real zero grid.
std::optional<NonconstantCertificate> is_nonconstant(const OperatorHandle& op,
                                                     const std::vector<Grid>& corpus,
                                                     double tol = 1e-12);

struct ContractionStep {
  int n = 0;
  Grid f_n;
  double support_measure = 0.0;
  std::optional<double> mu;
};

/**
 * f_n = chi * resample_affine(chi * f, T^n) for n = 0..n_max, with chi the
 * sharp indicator of the chi_radius ball. T needs an eigenvalue of modulus
 * > 1 (the identity is accepted as a degenerate case); otherwise a
 * ClassificationError is thrown.
 */
std::vector<ContractionStep> contraction_sequence(const Grid& f, const LinearMap2& t,
                                                  double chi_radius, int n_max,
                                                  const OperatorHandle* op = nullptr);

}  // namespace equiaudit

#endif  // EQUIAUDIT_GENERATOR_HPP
