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

#include <cmath>
#include <memory>
#include <numbers>

#include "equiaudit/errors.hpp"
#include "equiaudit/generator.hpp"

namespace equiaudit {
namespace {

Filter smooth_kernel(double radius, double h, double skew = 0.0) {
  return make_filter(
      [radius, skew](Vec2 x) { return bump_profile(x.norm() / radius) * (1.0 + skew * x.x); },
      radius, h);
}

ConvLayer layer(std::vector<std::vector<Filter>> k, std::vector<double> b, Nonlinearity nl) {
  return ConvLayer{std::move(k), std::move(b), nl};
}

Grid bumps(const GridGeometry& g) {
  return make_bump({0.1, -0.05}, 0.3, 1.0, g) + make_bump({-0.2, 0.15}, 0.2, -0.7, g);
}

TEST(GeneratorEval, IdentityReadsOrigin) {
  const Grid f = bumps(GridGeometry(1.0, 0.05));
  EXPECT_EQ(generator_eval(identity_operator(), f), f.at(0, 0));
}

TEST(GeneratorEval, ConvolutionMatchesDirectSum) {
  const double h = 0.05;
  const Filter k = smooth_kernel(0.3, h, 2.0);
  const Grid f = bumps(GridGeometry(1.0, h));
  double direct = 0.0;
  const int r = k.grid().half_count();
  for (int y = -r; y <= r; ++y) {
    for (int x = -r; x <= r; ++x) direct += k.grid().at(x, y) * f.value(-x, -y) * h * h;
  }
  EXPECT_NEAR(generator_eval(convolution_operator(k), f), direct, 1e-13);
}

TEST(GeneratorEval, ZeroKernelModelIsItsBias) {
  const double h = 0.1;
  const CnnModel m({layer({{zero_filter(0.3, h)}}, {1.75}, Nonlinearity::identity())});
  const OperatorHandle op = cnn_operator(m, 1, 0);
  const GridGeometry g(1.0, h);
  EXPECT_EQ(generator_eval(op, bumps(g)), 1.75);
  EXPECT_EQ(generator_eval(op, Grid(g)), 1.75);
}

TEST(GeneratorEval, RadiusMustFit) {
  const OperatorHandle op = convolution_operator(smooth_kernel(0.6, 0.1));
  EXPECT_THROW(generator_eval(op, Grid(GridGeometry(0.5, 0.1))), DomainFitError);
}

std::vector<OperatorHandle> covariant_operators(double h) {
  const Filter a = smooth_kernel(0.2, h, 1.5);
  const Filter b = smooth_kernel(0.15, h, -3.0);
  auto deep = std::make_shared<const CnnModel>(std::vector<ConvLayer>{
      layer({{a, b}}, {0.1, -0.2}, Nonlinearity::relu()),
      layer({{b, a}, {a, b}}, {0.0, 0.3}, Nonlinearity::sigmoid(1.0)),
      layer({{a}, {b}}, {-0.1}, Nonlinearity::relu())});
  return {identity_operator(), constant_operator(-0.5), convolution_operator(a),
          cnn_operator(deep, 1, 1), cnn_operator(deep, 3, 0)};
}

TEST(RoundTrip, GeneratorOfReconstructedOperator) {
  const Grid f = bumps(GridGeometry(0.8, 0.05));
  int calls = 0;
  const Generator mu = [&calls](const Grid& g) {
    ++calls;
    return g.at(0, 0) * 3.0 + g.at(1, -2);
  };
  EXPECT_EQ(generator_eval(operator_from_generator(mu), f), mu(f));
  EXPECT_EQ(calls, 2);
}

TEST(RoundTrip, OperatorReconstructedSampleExactly) {
  const double h = 0.05;
  const Grid f = bumps(GridGeometry(1.2, h));
  for (const OperatorHandle& op : covariant_operators(h)) {
    const OperatorHandle back = operator_from_generator(generator_of(op));
    const Grid want = op(f);
    const Grid got = back(f);
    // Away from the edge, where zero padding of hidden layers cannot differ.
    const int k = f.half_count() - static_cast<int>(std::ceil(*op.declared_radius() / h)) - 1;
    for (int y = -k; y <= k; ++y) {
      for (int x = -k; x <= k; ++x) {
        ASSERT_EQ(got.at(x, y), want.at(x, y)) << op.name() << " at " << x << "," << y;
      }
    }
  }
}

TEST(RoundTrip, ZeroAndPointGenerators) {
  const Grid f = bumps(GridGeometry(0.5, 0.05));
  const Grid zero = operator_from_generator([](const Grid&) { return 0.0; })(f);
  EXPECT_EQ(max_abs(zero), 0.0);
  const Grid same = operator_from_generator([](const Grid& g) { return g.at(0, 0); })(f);
  EXPECT_EQ(distance(same, f, Norm::sup), 0.0);
}

TEST(ConjugateGenerator, MatchesWarpedInput) {
  const double h = 0.02;
  const GridGeometry g(1.5, h);
  const Grid f = bumps(g);
  const LinearMap2 t = LinearMap2::rotation_degrees(30);
  for (const OperatorHandle& op : covariant_operators(h)) {
    const OperatorHandle conj = conjugate_operator(op, t);
    const double lhs = conj(f).at(0, 0);
    const double rhs = generator_eval(op, resample_affine(f, t));
    const double scale = std::max(1.0, std::abs(rhs));
    EXPECT_LE(std::abs(lhs - rhs), 5 * h * scale) << op.name();
    EXPECT_EQ(generator_eval(conj, f), lhs) << op.name();
  }
}

std::vector<double> radii(double from, double to, double step) {
  std::vector<double> out;
  for (double r = from; r <= to + 1e-9; r += step) out.push_back(r);
  return out;
}

TEST(Semilocal, SingleConvolution) {
  const double h = 0.1;
  const OperatorHandle op = convolution_operator(smooth_kernel(1.0, h, 0.5));
  const GridGeometry g(2.5, h);
  const SemilocalEstimate e = estimate_semilocal_radius(
      op, {bumps(g), Grid(g)}, radii(0.2, 2.0, 0.1), {.perturbations = 8, .seed = 3});
  ASSERT_TRUE(e.found());
  EXPECT_LE(e.radius, 1.0 + h + 1e-9);
  EXPECT_GE(e.radius, 1.0 - h - 1e-9);
  EXPECT_EQ(e.seed, 3u);
}

TEST(Semilocal, TwoLayerSum) {
  const double h = 0.1;
  const CnnModel m({layer({{smooth_kernel(1.0, h, 1.0)}}, {0.2}, Nonlinearity::sigmoid(1.0)),
                    layer({{smooth_kernel(2.0, h, -0.5)}}, {0.0}, Nonlinearity::identity())});
  const OperatorHandle op = cnn_operator(m, 2, 0);
  EXPECT_DOUBLE_EQ(*op.declared_radius(), 3.0);
  const GridGeometry g(4.0, h);
  const SemilocalEstimate e = estimate_semilocal_radius(op, {bumps(g)}, radii(1.0, 3.6, 0.2),
                                                        {.perturbations = 4, .seed = 1});
  ASSERT_TRUE(e.found());
  EXPECT_LE(e.radius, 3.0 + 2 * h + 1e-9);
}

TEST(Semilocal, GlobalAverageHasNoRadius) {
  const GridGeometry g(1.0, 0.1);
  const SemilocalEstimate e = estimate_semilocal_radius(global_average_operator(), {bumps(g)},
                                                        radii(0.1, 0.8, 0.1));
  EXPECT_FALSE(e.found());
  EXPECT_EQ(e.radius, SemilocalEstimate::kNotSemilocal);
}

TEST(Semilocal, ConjugateRadiusBound) {
  const double h = 0.05;
  const double r = 0.4;
  const OperatorHandle op = convolution_operator(smooth_kernel(r, h, 1.0));
  const GridGeometry g(2.0, h);
  const std::vector<Grid> probes{bumps(g)};
  const std::vector<double> rs = radii(0.05, 1.6, 0.05);
  const double base = estimate_semilocal_radius(op, probes, rs, {.perturbations = 4}).radius;
  for (const LinearMap2& t : {LinearMap2::scaling(0.5, 0.5), LinearMap2::shear(1.0),
                              LinearMap2::rotation_degrees(30), LinearMap2{1.2, 0.3, 0.0, 0.6}}) {
    const SemilocalEstimate e =
        estimate_semilocal_radius(conjugate_operator(op, t), probes, rs, {.perturbations = 4});
    ASSERT_TRUE(e.found()) << to_string(t);
    EXPECT_LE(e.radius, operator_norm(inverse(t)) * base + 2 * h + 1e-9) << to_string(t);
  }
}

TEST(Semilocal, Rejects) {
  const GridGeometry g(1.0, 0.1);
  EXPECT_THROW(estimate_semilocal_radius(identity_operator(), {}, {0.1}), PreconditionError);
  EXPECT_THROW(estimate_semilocal_radius(identity_operator(), {Grid(g)}, {0.3, 0.2}),
               PreconditionError);
  EXPECT_THROW(estimate_semilocal_radius(identity_operator(), {Grid(g)}, {0.5, 1.0}),
               DomainFitError);
}

TEST(Nonconstant, ConstantOperatorHasNoCertificate) {
  const GridGeometry g(1.0, 0.1);
  const CnnModel m({layer({{zero_filter(0.3, 0.1)}}, {2.0}, Nonlinearity::relu())});
  EXPECT_FALSE(is_nonconstant(cnn_operator(m, 1, 0), {bumps(g), Grid(g)}).has_value());
}

TEST(Nonconstant, ConvolutionCertificate) {
  const GridGeometry g(1.0, 0.05);
  const Filter k = smooth_kernel(0.3, 0.05);
  const std::vector<Grid> corpus{Grid(g), make_bump({0, 0}, 0.3, 1.0, g)};
  const auto cert = is_nonconstant(convolution_operator(k), corpus);
  ASSERT_TRUE(cert.has_value());
  EXPECT_EQ(cert->index, 1u);
  EXPECT_EQ(cert->mu_zero, 0.0);
  EXPECT_EQ(cert->mu_f, convolve_at(corpus[1], k, {0, 0}));
}

TEST(Nonconstant, SaturatedReluNeedsLargeInput) {
  const double h = 0.05;
  // Unit-mass kernel: |conv| <= sup |f|, so bias -10 hides inputs of amplitude 1.
  Filter k = smooth_kernel(0.3, h);
  Grid kg = k.grid();
  kg *= 1.0 / k.l1_norm();
  k = Filter(kg, k.support_radius());
  const CnnModel m({layer({{k}}, {-10.0}, Nonlinearity::relu())});
  const OperatorHandle op = cnn_operator(m, 1, 0);
  const GridGeometry g(1.0, h);
  EXPECT_FALSE(is_nonconstant(op, {make_bump({0, 0}, 0.5, 1.0, g)}).has_value());
  const auto cert = is_nonconstant(op, {make_bump({0, 0}, 0.5, 100.0, g)});
  ASSERT_TRUE(cert.has_value());
  EXPECT_GT(cert->mu_f, 0.0);
}

Grid annulus(const GridGeometry& g, double inner, double outer) {
  const double mid = 0.5 * (inner + outer);
  const double half = 0.5 * (outer - inner);
  return render([=](Vec2 x) { return bump_profile((x.norm() - mid) / half); }, g);
}

TEST(Contraction, AnnulusLeavesTheBall) {
  const GridGeometry g(2.5, 0.02);
  const auto seq = contraction_sequence(annulus(g, 0.5, 1.0), LinearMap2::scaling(2, 2), 1.0, 3);
  ASSERT_EQ(seq.size(), 4u);
  EXPECT_GT(seq[0].support_measure, 0.0);
  // Bilinear reads near |x| = 1 touch samples just inside 0.5, leaving a
  // one-cell shell at the cut-off for n = 1 only.
  const Grid& f1 = seq[1].f_n;
  const int k = f1.half_count();
  for (int y = -k; y <= k; ++y) {
    for (int x = -k; x <= k; ++x) {
      if (f1.at(x, y) != 0.0) {
        ASSERT_GT(f1.position(x, y).norm(), 1.0 - 2 * std::numbers::sqrt2 * 0.02);
      }
    }
  }
  for (int n = 2; n <= 3; ++n) {
    EXPECT_EQ(max_abs(seq[n].f_n), 0.0) << n;
    EXPECT_EQ(seq[n].support_measure, 0.0) << n;
  }
}

TEST(Contraction, OffsetStripUnderAnisotropicScaling) {
  const GridGeometry g(2.5, 0.02);
  const Grid f = make_bump({0.75, 0.1}, 0.25, 1.0, g) + make_bump({-0.8, -0.3}, 0.2, 1.0, g);
  const auto seq = contraction_sequence(f, LinearMap2::scaling(2, 1), 1.0, 3);
  for (int n = 1; n <= 3; ++n) EXPECT_EQ(max_abs(seq[n].f_n), 0.0) << n;
}

TEST(Contraction, IdentityKeepsCutOff) {
  const GridGeometry g(1.5, 0.05);
  const Grid f = bumps(g) + make_bump({0.9, 0.9}, 0.3, 1.0, g);
  const OperatorHandle op = identity_operator();
  const auto seq = contraction_sequence(f, LinearMap2::identity(), 1.0, 2, &op);
  for (const ContractionStep& s : seq) {
    EXPECT_EQ(distance(s.f_n, restrict_to_ball(f, 1.0), Norm::sup), 0.0);
    EXPECT_EQ(*s.mu, f.at(0, 0));
  }
}

TEST(Contraction, MuTendsToMuZero) {
  const double h = 0.02;
  const GridGeometry g(2.0, h);
  const Filter k = smooth_kernel(0.2, h);
  const CnnModel m({layer({{k}}, {0.25}, Nonlinearity::sigmoid(1.0))});
  const OperatorHandle op = cnn_operator(m, 1, 0);
  const double mu0 = generator_eval(op, Grid(g));
  const auto seq =
      contraction_sequence(make_bump({0.3, 0.2}, 0.25, 1.0, g), LinearMap2::scaling(2, 2), 1.0,
                           3, &op);
  EXPECT_NE(*seq[0].mu, mu0);
  EXPECT_EQ(*seq.back().mu, mu0);
}

TEST(Contraction, NeedsExpandingDirection) {
  const Grid f(GridGeometry(1.0, 0.1));
  EXPECT_THROW(contraction_sequence(f, LinearMap2::rotation_degrees(90), 0.5, 2),
               ClassificationError);
  EXPECT_THROW(contraction_sequence(f, LinearMap2::scaling(0.5, 0.5), 0.5, 2),
               ClassificationError);
  EXPECT_THROW(contraction_sequence(f, LinearMap2::scaling(2, 2), 1.5, 2), DomainFitError);
}

}  // namespace
}  // namespace equiaudit
