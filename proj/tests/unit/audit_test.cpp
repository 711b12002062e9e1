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


#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <numbers>

#include "equiaudit/audit.hpp"
#include "equiaudit/errors.hpp"

namespace equiaudit {
namespace {

constexpr double kPi = std::numbers::pi;

double gauss(double r, double sigma) {
  return std::exp(-0.5 * r * r / (sigma * sigma)) / (2 * kPi * sigma * sigma);
}

Filter gaussian_filter(double sigma, double h) {
  return radial_filter([sigma](double r) { return gauss(r, sigma); }, 4 * sigma, h);
}

Filter ring_filter(double radius, double h) {
  return radial_filter(
      [radius](double r) { return bump_profile((r - 0.6 * radius) / (0.4 * radius)); }, radius,
      h);
}

// Two offset blobs under a taper; no symmetry at all.
Filter lopsided_filter(double radius, double h) {
  return make_filter(
      [radius](Vec2 x) {
        const double s = radius * radius;
        const double a = std::exp(-((x.x - 0.3 * radius) * (x.x - 0.3 * radius) +
                                    (x.y - 0.1 * radius) * (x.y - 0.1 * radius)) / (0.08 * s));
        const double b = 0.5 * std::exp(-((x.x + 0.2 * radius) * (x.x + 0.2 * radius) +
                                          (x.y + 0.35 * radius) * (x.y + 0.35 * radius)) /
                                        (0.04 * s));
        return bump_profile(x.norm() / radius) * (a + b);
      },
      radius, h);
}

TEST(Thresholds, ScaleWithSpacing) {
  EXPECT_DOUBLE_EQ(tolerance_at(0.02), 0.1);
  EXPECT_DOUBLE_EQ(floor_at(0.02), 0.2);
}

TEST(ResidualCurveFit, FirstOrderData) {
  const ResidualCurve c = fit_residual_curve({0.01, 0.04, 0.02}, {0.3, 1.2, 0.6});
  EXPECT_EQ(c.spacings, (std::vector<double>{0.04, 0.02, 0.01}));
  EXPECT_EQ(c.residuals, (std::vector<double>{1.2, 0.6, 0.3}));
  EXPECT_NEAR(c.fitted_rate, 1.0, 1e-12);
  EXPECT_FALSE(c.exact);
  EXPECT_EQ(c.finest(), 0.3);
}

TEST(ResidualCurveFit, ExactAndConstant) {
  const ResidualCurve e = fit_residual_curve({0.1, 0.05}, {0.0, 1e-15});
  EXPECT_TRUE(e.exact);
  EXPECT_TRUE(std::isinf(e.fitted_rate));
  EXPECT_NEAR(fit_residual_curve({0.1, 0.05, 0.025}, {2.0, 2.0, 2.0}).fitted_rate, 0.0, 1e-12);
  EXPECT_THROW(fit_residual_curve({0.1}, {}), PreconditionError);
}

TEST(Alignment, IdentityIsExact) {
  const GridGeometry g(1.0, 0.02);
  const Grid f = make_bump({0.1, 0.05}, 0.3, 1.0, g);
  const OperatorHandle op = convolution_operator(lopsided_filter(0.2, 0.02));
  const AlignmentResult a =
      alignment_residual(op, LinearMap2::identity(), LinearMap2::identity(), f);
  EXPECT_EQ(a.residual, 0.0);
  EXPECT_GT(a.scale, 0.0);
  EXPECT_GT(a.trusted_samples, 0u);
}

TEST(Alignment, QuarterTurnRadialFilter) {
  for (double h : {0.04, 0.02}) {
    const GridGeometry g(1.0, h);
    const Grid f = make_bump({0.12, 0.05}, 0.3, 1.0, g) + make_bump({-0.2, 0.1}, 0.15, 0.5, g);
    const OperatorHandle op = convolution_operator(gaussian_filter(0.05, h));
    const LinearMap2 t = LinearMap2::rotation_degrees(90);
    const AlignmentResult a = alignment_residual(op, t, inverse(t), f);
    EXPECT_LE(a.relative, tolerance_at(h)) << h;
  }
}

TEST(Alignment, ScalingMisaligns) {
  const double h = 0.02;
  const GridGeometry g(1.5, h);
  const Grid f = make_bump({0.1, 0.05}, 0.3, 1.0, g);
  const OperatorHandle op = convolution_operator(gaussian_filter(0.05, h));
  const AlignmentResult a =
      alignment_residual(op, LinearMap2::scaling(2, 2), LinearMap2::scaling(0.5, 0.5), f);
  EXPECT_GE(a.relative, 0.1);
}

TEST(Alignment, DomainFit) {
  const GridGeometry g(0.5, 0.05);
  const Grid f = make_bump({0, 0}, 0.3, 1.0, g);
  const OperatorHandle op = convolution_operator(gaussian_filter(0.05, 0.05));
  EXPECT_THROW(
      alignment_residual(op, LinearMap2::scaling(2, 2), LinearMap2::scaling(0.5, 0.5), f),
      DomainFitError);
}

const std::vector<double> kSpacings{0.04, 0.02, 0.01};

TEST(Naturality, IdentityIsExact) {
  const auto src = [](double h) { return lopsided_filter(0.2, h); };
  const ResidualCurve c = naturality_check(src, LinearMap2::identity(),
                                           bump_field({0.1, 0}, 0.3), kSpacings, 0.8);
  EXPECT_TRUE(c.exact);
}

TEST(Naturality, FirstOrderConvergence) {
  const AnalyticField f = bump_field({0.1, -0.05}, 0.3);
  const std::vector<std::pair<LinearMap2, FilterSource>> cases = {
      {LinearMap2::rotation_degrees(30), [](double h) { return gaussian_filter(0.05, h); }},
      {LinearMap2::scaling(2, 1), [](double h) { return lopsided_filter(0.2, h); }},
      {LinearMap2::shear(1), [](double h) { return lopsided_filter(0.2, h); }},
  };
  for (const auto& [t, src] : cases) {
    const ResidualCurve c = naturality_check(src, t, f, kSpacings, 1.2);
    EXPECT_GE(c.fitted_rate, 0.9) << to_string(t);
    EXPECT_LE(c.finest(), tolerance_at(0.01)) << to_string(t);
  }
}

TEST(Naturality, DomainFit) {
  const auto src = [](double h) { return gaussian_filter(0.05, h); };
  EXPECT_THROW(naturality_check(src, LinearMap2::scaling(2, 2), bump_field({0, 0}, 0.4), {0.05},
                                0.6),
               DomainFitError);
}

TEST(Commutation, LatticeSymmetryIsExact) {
  const double h = 0.02;
  const Grid f = make_bump({0.1, 0.2}, 0.3, 1.0, GridGeometry(1.0, h));
  EXPECT_EQ(commutation_check(LinearMap2::rotation_degrees(90), {h, 0}, f), 0.0);
  EXPECT_EQ(commutation_check(LinearMap2::shear(0.7), {0, 0}, f), 0.0);
}

TEST(Commutation, ScalingWithinInterpolationError) {
  const double h = 0.02;
  const Grid f = make_bump({0.1, 0.2}, 0.3, 1.0, GridGeometry(1.5, h));
  EXPECT_LE(commutation_check(LinearMap2::scaling(2, 2), {h, 0}, f), tolerance_at(h) * max_abs(f));
  EXPECT_LE(commutation_check(LinearMap2::rotation_degrees(30), {h, 0}, f),
            tolerance_at(h) * max_abs(f));
}

TEST(FixedPoint, RadialUnderRotation) {
  const double h = 0.01;
  for (double deg : {30.0, 90.0, 137.0}) {
    const FixedPointResult r =
        filter_fixed_point_residual(gaussian_filter(0.06, h), LinearMap2::rotation_degrees(deg));
    EXPECT_LE(r.residual, tolerance_at(h)) << deg;
    EXPECT_NEAR(r.sup_ratio, 1.0, 0.01) << deg;
  }
}

TEST(FixedPoint, DeterminantAwayFromOne) {
  const double h = 0.02;
  for (const Filter& k : {gaussian_filter(0.05, h), lopsided_filter(0.3, h), ring_filter(0.3, h)}) {
    const FixedPointResult r = filter_fixed_point_residual(k, LinearMap2::scaling(2, 2));
    EXPECT_GE(r.residual, 0.5);
    EXPECT_NEAR(r.sup_ratio, 4.0, 0.4);
    const FixedPointResult s = filter_fixed_point_residual(k, LinearMap2::scaling(0.5, 0.5));
    EXPECT_GE(s.residual, 0.5);
  }
}

TEST(FixedPoint, ZeroFilterIsDegenerate) {
  const FixedPointResult r =
      filter_fixed_point_residual(zero_filter(0.2, 0.05), LinearMap2::rotation_degrees(90));
  EXPECT_TRUE(r.degenerate);
  EXPECT_EQ(r.residual, 0.0);
}

TEST(Norot, QuarterTurnGaussians) {
  const Filter k = gaussian_filter(0.25, 0.05);  // radius 1
  const CounterexampleCertificate c =
      norot_counterexample(k, k, LinearMap2::rotation_degrees(90), {.bump_radius = 1.0});
  EXPECT_TRUE(c.valid);
  EXPECT_LE(std::abs(c.rhs), 1e-6 * c.scale);
  EXPECT_GE(std::abs(c.lhs), 100 * 1e-6 * c.scale);
  EXPECT_GT(std::abs(c.lhs), 0.01 * c.scale);
  EXPECT_GT(c.displacement, c.required_displacement);
  EXPECT_GE(c.required_displacement, c.bump_radius + k.support_radius() + 1.0);
}

TEST(Norot, HalfTurnAndScaling) {
  const Filter k = lopsided_filter(0.3, 0.05);
  for (const LinearMap2& t : {LinearMap2::rotation_degrees(180), LinearMap2::scaling(1.5, 1.5)}) {
    const CounterexampleCertificate c = norot_counterexample(k, k, t);
    EXPECT_TRUE(c.valid) << to_string(t);
    EXPECT_LE(std::abs(c.rhs), 1e-6 * c.scale);
  }
  const CounterexampleCertificate c = norot_counterexample(k, k, LinearMap2::scaling(1.5, 1.5));
  EXPECT_TRUE(c.p_lattice.x == 0 || c.p_lattice.y == 0);
}

TEST(Norot, MultiLayerOperators) {
  const double h = 0.05;
  const CnnModel m({ConvLayer{{{lopsided_filter(0.3, h)}}, {0.2}, Nonlinearity::sigmoid(1.0)},
                    ConvLayer{{{gaussian_filter(0.08, h)}}, {0.0}, Nonlinearity::relu()}});
  const OperatorHandle op = cnn_operator(m, 2, 0);
  const CounterexampleCertificate c =
      norot_counterexample(op, op, LinearMap2::rotation_degrees(90), {.spacing = h});
  EXPECT_TRUE(c.valid);
  EXPECT_EQ(c.rhs, 0.0);
}

TEST(Norot, Rejects) {
  const Filter k = gaussian_filter(0.05, 0.05);
  EXPECT_THROW(norot_counterexample(k, k, LinearMap2::identity()), PreconditionError);
  EXPECT_THROW(norot_counterexample(k, k, LinearMap2::rotation_degrees(90), {.extent = 0.5}),
               DomainFitError);
  EXPECT_THROW(
      norot_counterexample(k, k, LinearMap2::scaling(1.001, 1.001), {.max_extent = 10.0}),
      DomainFitError);
}

// L1 distance between centered Gaussians of unit mass, by radial quadrature.
double gaussian_l1_gap(double s1, double s2) {
  const double top = 8 * std::max(s1, s2);
  const int n = 20000;
  const double dr = top / n;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const double r = (i + 0.5) * dr;
    sum += std::abs(gauss(r, s1) - gauss(r, s2)) * 2 * kPi * r * dr;
  }
  return sum;
}

TEST(Mollifier, GaussianMatchesClosedForm) {
  const double sigma = 0.25;
  const double h = 0.02;
  const MollifierResult r = mollifier_recover_filter(gaussian_filter(sigma, h), sigma, 4);
  ASSERT_EQ(r.steps.size(), 5u);
  EXPECT_TRUE(r.monotone_tail);
  // sigma0 / 16 is below two samples.
  EXPECT_TRUE(r.resolution_warning);
  for (const MollifierStep& s : r.steps) {
    const double oracle = gaussian_l1_gap(std::hypot(sigma, s.sigma), sigma);
    EXPECT_NEAR(s.relative, oracle, 0.01) << s.n;
  }
  EXPECT_LE(r.steps.back().relative, 0.05);
}

TEST(Mollifier, SingleStepIsSmoothingLoss) {
  const double sigma = 0.1;
  const MollifierResult r = mollifier_recover_filter(gaussian_filter(sigma, 0.02), 0.05, 0);
  ASSERT_EQ(r.steps.size(), 1u);
  EXPECT_NEAR(r.steps[0].relative, gaussian_l1_gap(std::hypot(sigma, 0.05), sigma), 0.01);
}

TEST(Mollifier, ImpulseAndWarning) {
  const double h = 0.02;
  const MollifierResult r = mollifier_recover_filter(impulse_filter(h), 0.02, 2);
  EXPECT_TRUE(r.resolution_warning);
  EXPECT_THROW(mollifier_recover_filter(impulse_filter(h), 0.0, 2), PreconditionError);
}

std::vector<Grid> bump_corpus(const GridGeometry& g) {
  return {make_bump({0.1, 0.05}, 0.2, 1.0, g), make_bump({-0.15, 0.2}, 0.25, 1.0, g),
          make_bump({0.2, -0.2}, 0.15, 1.0, g)};
}

TEST(GeneratorInvariance, RadialUnderRotation) {
  const double h = 0.02;
  const GridGeometry g(1.0, h);
  const Filter k = gaussian_filter(0.06, h);
  const std::vector<Grid> corpus = bump_corpus(g);
  double scale = 0.0;
  for (const Grid& f : corpus) scale = std::max(scale, std::abs(convolve_at(f, k, {0, 0})));
  const InvarianceResidual r =
      generator_invariance_residual(convolution_operator(k), LinearMap2::rotation_degrees(30), corpus);
  EXPECT_LE(r.max_residual, tolerance_at(h) * scale);
  EXPECT_EQ(r.per_item.size(), corpus.size());
}

TEST(GeneratorInvariance, ConstantOperator) {
  const GridGeometry g(1.0, 0.05);
  const InvarianceResidual r = generator_invariance_residual(
      constant_operator(3.0), LinearMap2::scaling(2, 2), bump_corpus(g));
  EXPECT_EQ(r.max_residual, 0.0);
}

TEST(GeneratorInvariance, RandomCnnUnderScaling) {
  ModelRecipe recipe;
  recipe.layers = 2;
  recipe.symmetrization = Symmetrization::radial;
  recipe.kernel_radius = 0.2;
  recipe.seed = 5;
  const double h = 0.02;
  const CnnModel m = synthesize_model(recipe).at(h);
  const OperatorHandle op = cnn_operator(m, 2, 0);
  const GridGeometry g(1.5, h);
  const std::vector<Grid> corpus = bump_corpus(g);
  const double mu0 = generator_eval(op, Grid(g));
  double scale = 0.0;
  for (const Grid& f : corpus) scale = std::max(scale, std::abs(generator_eval(op, f) - mu0));
  ASSERT_GT(scale, 0.0);
  const InvarianceResidual r = generator_invariance_residual(op, LinearMap2::scaling(2, 2), corpus);
  EXPECT_GT(r.max_residual, floor_at(h) * scale) << scale;
  const InvarianceResidual rot =
      generator_invariance_residual(op, LinearMap2::rotation_degrees(90), corpus);
  EXPECT_GT(r.max_residual, 10 * rot.max_residual);
}

TEST(TranslationCovariance, ResidualsFollowTheScene) {
  const double h = 0.02;
  const GridGeometry g(1.2, h);
  const Grid f = make_bump({0.1, 0.05}, 0.25, 1.0, g);
  const Grid moved = translate(f, LatticePoint{7, -4});
  const Filter k = lopsided_filter(0.2, h);
  const CnnModel m({ConvLayer{{{k}}, {0.3}, Nonlinearity::sigmoid(1.0)}});
  const OperatorHandle op = cnn_operator(m, 1, 0);
  const LinearMap2 t = LinearMap2::rotation_degrees(90);
  const AlignmentResult a = alignment_residual(op, t, inverse(t), f);
  const AlignmentResult b = alignment_residual(op, t, inverse(t), moved);
  EXPECT_GT(a.relative, 0.0);
  EXPECT_NEAR(a.relative, b.relative, 1e-12 * a.relative);
  EXPECT_NEAR(commutation_check(t, {h, 2 * h}, f), commutation_check(t, {h, 2 * h}, moved), 1e-15);
}

AuditConfig small_config() {
  AuditConfig cfg;
  cfg.extent = 1.5;
  cfg.spacing = 0.03;
  cfg.refinements = 1;
  cfg.seed = 7;
  cfg.semilocal_perturbations = 4;
  cfg.corpus.positions = 3;
  cfg.corpus.radius_fractions = {0.3, 0.5};
  return cfg;
}

ModelRecipe small_recipe(Symmetrization sym) {
  ModelRecipe r;
  r.layers = 2;
  r.channels = 2;
  r.kernel_radius = 0.2;
  r.symmetrization = sym;
  r.seed = 7;
  return r;
}

std::vector<TransformSpec> specs(std::initializer_list<std::pair<const char*, LinearMap2>> list) {
  std::vector<TransformSpec> out;
  for (const auto& [s, t] : list) out.push_back({s, t});
  return out;
}

TEST(FullAudit, Dichotomy) {
  const AuditBundle b = full_audit(
      synthesize_model(small_recipe(Symmetrization::radial)),
      specs({{"rot:90", LinearMap2::rotation_degrees(90)},
             {"shear:1", LinearMap2::shear(1)},
             {"scale:2", LinearMap2::scaling(2, 2)}}),
      small_config());
  const auto& tr = b.report["transforms"];
  ASSERT_EQ(tr.size(), 3u);
  EXPECT_EQ(tr[0]["verdict"], "aligned");
  EXPECT_EQ(tr[1]["verdict"], "misaligned");
  EXPECT_EQ(tr[2]["verdict"], "misaligned");
  EXPECT_TRUE(b.all_match);
  EXPECT_EQ(b.report["summary"]["mismatches"], 0);
  bool saw_contraction = false;
  for (const auto& c : b.report["checks"]) {
    if (c["name"] == "contraction[scale:2]") {
      saw_contraction = true;
      EXPECT_EQ(c["verdict"], "vanishes");
    }
    if (c["name"] == "semilocal_radius") {
      EXPECT_EQ(c["verdict"], "pass");
    }
    if (c["name"] == "naturality[rot:90]") {
      EXPECT_EQ(c["verdict"], "pass");
    }
  }
  EXPECT_TRUE(saw_contraction);
  EXPECT_FALSE(b.curves.empty());
  EXPECT_FALSE(b.images.empty());
}

TEST(FullAudit, EmptyTransformList) {
  const AuditBundle b =
      full_audit(synthesize_model(small_recipe(Symmetrization::radial)), {}, small_config());
  EXPECT_TRUE(b.report["transforms"].empty());
  EXPECT_TRUE(b.curves.empty());
  EXPECT_TRUE(b.images.empty());
  EXPECT_TRUE(b.all_match);
  for (const auto& c : b.report["checks"]) {
    EXPECT_TRUE(c["name"] == "semilocal_radius" || c["name"] == "nonconstant");
  }
}

TEST(FullAudit, NFoldModelAlignsUnderItsRotation) {
  ModelRecipe r = small_recipe(Symmetrization::n_fold);
  r.n = 4;
  const AuditBundle b = full_audit(
      synthesize_model(r), specs({{"rot:90", LinearMap2::rotation_degrees(90)}}), small_config());
  EXPECT_EQ(b.report["transforms"][0]["verdict"], "aligned");
  EXPECT_TRUE(b.all_match);
}

TEST(FullAudit, JobsDoNotChangeTheReport) {
  AuditConfig one = small_config();
  AuditConfig two = one;
  two.jobs = 3;
  const auto model = synthesize_model(small_recipe(Symmetrization::radial));
  const auto ts = specs({{"rot:90", LinearMap2::rotation_degrees(90)},
                         {"scale:0.5", LinearMap2::scaling(0.5, 0.5)}});
  EXPECT_EQ(full_audit(model, ts, one).report.dump(),
            full_audit(model, ts, two).report.dump());
}

TEST(SymmetrizedModel, PerturbationRaisesResidual) {
  const double h = 0.02;
  const GridGeometry g(1.0, h);
  const LinearMap2 t = LinearMap2::rotation_degrees(90);
  const Filter sym = n_fold_symmetrize(lopsided_filter(0.2, h), t, 4);
  const Filter bump = lopsided_filter(0.2, h);
  const std::vector<Grid> corpus = bump_corpus(g);
  auto worst = [&](const Filter& k) {
    const OperatorHandle op = cnn_operator(
        CnnModel({ConvLayer{{{k}}, {0.1}, Nonlinearity::sigmoid(1.0)}}), 1, 0);
    double w = 0.0;
    for (const Grid& f : corpus) w = std::max(w, alignment_residual(op, t, inverse(t), f).relative);
    return w;
  };
  const double base = worst(sym);
  EXPECT_LE(base, tolerance_at(h));
  double prev = base;
  for (double eps : {0.01, 0.1, 1.0}) {
    const GridGeometry common = sym.grid().geometry();
    Grid mixed = sym.grid() + eps * resample_to(bump.grid(), common);
    const double w = worst(Filter(mixed, sym.support_radius()));
    EXPECT_GT(w, prev) << eps;
    prev = w;
  }
}

}  // namespace
}  // namespace equiaudit
