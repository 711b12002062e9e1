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

#ifndef EQUIAUDIT_AUDIT_HPP
#define EQUIAUDIT_AUDIT_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "equiaudit/conv.hpp"
#include "equiaudit/generator.hpp"
#include "equiaudit/grid.hpp"
#include "equiaudit/synth.hpp"
#include "equiaudit/transform.hpp"

/**
 * \file
 * \brief Residuals, convergence studies and counterexample certificates.
 *
 * Thresholds scale with the spacing: tol(h) = 5 h and floor(h) = 10 h, both
 * relative to the size of the quantity being compared. A misalignment must stay
 * above the floor at the finest spacing and must not shrink by more than half
 * from the previous spacing; a discretization artifact shrinks roughly with h.
 */

namespace equiaudit {

double tolerance_at(double spacing);
double floor_at(double spacing);

struct ResidualCurve {
  /// Descending.
  std::vector<double> spacings;
  std::vector<double> residuals;
  /// Least-squares slope of log residual against log spacing; +inf when exact.
  double fitted_rate = 0.0;
  /// Every residual at or below the exactness threshold.
  bool exact = false;

  double finest() const { return residuals.back(); }
};

/// Sorts by descending spacing and fits the rate.
ResidualCurve fit_residual_curve(std::vector<double> spacings, std::vector<double> residuals,
                                 double exact_threshold = 1e-12);

struct AlignmentResult {
  double residual = 0.0;  ///< ||T_g Lambda T_h f - Lambda f|| over the trusted region
  double scale = 0.0;     ///< ||Lambda f - Lambda 0|| over the same region
  double relative = 0.0;  ///< residual / scale, 0 when the scale vanishes
  std::size_t trusted_samples = 0;
};

/**
 * Samples x trusted for comparing T_g g against Lambda f: both x and T_g^-1 x
 * stay `margin` (plus one or two samples) away from the domain boundary.
 */
std::function<bool(int, int)> trusted_mask(const GridGeometry& geometry, const LinearMap2& t_g,
                                           double margin);

/// Distance of resample_affine(lambda_th_f, T_g) from lambda_f on the trusted region.
AlignmentResult alignment_from_outputs(const Grid& lambda_th_f, const Grid& lambda_f,
                                       const Grid& lambda_zero, const LinearMap2& t_g,
                                       Norm norm, double margin);

/**
 * Warps f by T_h, applies the operator, warps back by T_g and compares with
 * Lambda f. `margin` defaults to the operator's declared radius. Throws
 * DomainFitError when the warped support plus the margin leaves the domain.
 */
AlignmentResult alignment_residual(const OperatorHandle& op, const LinearMap2& t_h,
                                   const LinearMap2& t_g, const Grid& f, Norm norm = Norm::L1,
                                   std::optional<double> margin = std::nullopt);

using FilterSource = std::function<Filter(double spacing)>;

/**
 * Relative L1 distance between T^-1 conv_lambda T f and conv_{|det T| T^-1 lambda} f
 * at each spacing (square domain of half-width `extent`).
 */
ResidualCurve naturality_check(const FilterSource& lambda, const LinearMap2& t,
                               const AnalyticField& f, const std::vector<double>& spacings,
                               double extent);

/// sup | T D_delta f - D_{T delta} T f |.
double commutation_check(const LinearMap2& t, Vec2 delta, const Grid& f);

struct FixedPointResult {
  /// ||lambda - transform_filter(lambda, T)||_1 / ||lambda||_1.
  double residual = 0.0;
  /// sup |transform_filter(lambda, T)| / sup |lambda|; equals |det T| in the limit.
  double sup_ratio = 0.0;
  bool degenerate = false;  ///< zero filter
};

FixedPointResult filter_fixed_point_residual(const Filter& lambda, const LinearMap2& t);

struct CounterexampleCertificate {
  Vec2 bump_center;
  double bump_radius = 0.0;
  LatticePoint p_lattice;
  Vec2 p;
  double displacement = 0.0;           ///< |T^-1 p - p|
  double required_displacement = 0.0;  ///< r(f) + r(Lambda_2) + max(1, 2h)
  double extent = 0.0;
  double spacing = 0.0;
  double lhs = 0.0;
  double rhs = 0.0;
  double separation = 0.0;
  double scale = 0.0;
  double tol = 0.0;
  double floor = 0.0;
  bool valid = false;
};

struct NorotOptions {
  double spacing = 0.05;
  /// 0 picks the first operator's radius (at least 4 samples).
  double bump_radius = 0.0;
  /// 0 sizes the domain automatically; otherwise too small an extent throws.
  double extent = 0.0;
  /// Reference magnitude; 0 uses |lhs|.
  double scale = 0.0;
  /// |rhs| bound relative to scale.
  double relative_tol = 1e-6;
  /// |lhs| must exceed floor_factor * tol.
  double floor_factor = 100.0;
  /// Automatic sizing above this half-width throws DomainFitError.
  double max_extent = 64.0;
};

/**
 * Builds a bump f with (Lambda_1 f)(0) != (Lambda_1 0)(0), moves it to -p with
 * |T^-1 p - p| above the required displacement, and compares
 * lhs = (Lambda_1 D_{-p} f)(-p) with rhs = (Lambda_2 D_{-p} f)(-T^-1 p), each
 * relative to the operator's response to the zero image. Both operators must
 * declare a radius and work at options.spacing.
 */
CounterexampleCertificate norot_counterexample(const OperatorHandle& op1,
                                               const OperatorHandle& op2, const LinearMap2& t,
                                               const NorotOptions& options = {});

/// Single-filter form; scale defaults to ||lambda_1||_1 sup|f|.
CounterexampleCertificate norot_counterexample(const Filter& lambda1, const Filter& lambda2,
                                               const LinearMap2& t, NorotOptions options = {});

struct MollifierStep {
  int n = 0;
  double sigma = 0.0;
  double error = 0.0;     ///< ||conv_lambda f_n - lambda||_1
  double relative = 0.0;  ///< error / ||lambda||_1
};

struct MollifierResult {
  std::vector<MollifierStep> steps;
  double lambda_l1 = 0.0;
  /// sigma of the last step below two samples.
  bool resolution_warning = false;
  /// Errors non-increasing from the first sigma <= r(lambda) / 4.
  bool monotone_tail = true;
};

/// Gaussian mollifiers sigma_n = sigma0 2^-n (n = 0..n_steps), cut at 4 sigma_n
/// and renormalized to unit discrete mass.
MollifierResult mollifier_recover_filter(const Filter& lambda, double sigma0, int n_steps);

struct InvarianceResidual {
  double max_residual = 0.0;
  std::size_t argmax = 0;
  double mu_f = 0.0;
  double mu_tf = 0.0;
  std::vector<double> per_item;
};

/// max over the corpus of |mu(T f) - mu(f)|.
InvarianceResidual generator_invariance_residual(const OperatorHandle& op, const LinearMap2& t,
                                                 const std::vector<Grid>& corpus);

// ------------------------------------------------------------------ full audit

struct TransformSpec {
  std::string spec;
  LinearMap2 map;
};

struct AuditConfig {
  double extent = 2.0;
  /// Finest spacing; the study also runs at spacing * 2^j for j = 1..refinements.
  double spacing = 0.02;
  int refinements = 1;
  CorpusRecipe corpus;
  std::uint64_t seed = 0;
  int jobs = 1;
  int semilocal_perturbations = 32;
  int contraction_steps = 4;
  ClassifyOptions classify;
};

struct CurveExport {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

struct ImageExport {
  std::string name;
  std::vector<Grid> panels;
};

struct AuditBundle {
  nlohmann::json report;
  std::vector<CurveExport> curves;
  std::vector<ImageExport> images;
  /// Every alignment verdict matched the expected dichotomy.
  bool all_match = true;
};

/**
 * Runs every check for each transform and assembles the report. The corpus
 * radius, when not given, is the largest radius whose warped images and
 * receptive fields fit the domain for all transforms.
 */
AuditBundle full_audit(const ModelSource& model, const std::vector<TransformSpec>& transforms,
                       const AuditConfig& config);

}  // namespace equiaudit

#endif  // EQUIAUDIT_AUDIT_HPP
