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

#include "equiaudit/audit.hpp"
#include "equiaudit/errors.hpp"
#include "equiaudit/synth.hpp"

namespace equiaudit {
namespace {

TEST(Corpus, DefaultComposition) {
  CorpusRecipe r;
  r.radius = 0.8;
  const std::vector<AnalyticField> c = build_corpus(r);
  ASSERT_EQ(c.size(), 5u * 3u + 3u);
  EXPECT_EQ(c[0].name, "bump[0,0]");
  EXPECT_EQ(c[15].name, "edge(30deg)");
  EXPECT_EQ(c[16].name, "glyph_W");
  EXPECT_EQ(c[17].name, "glyph_M");
  for (const AnalyticField& f : c) EXPECT_LE(f.support_radius, 0.8 + 1e-12) << f.name;
}

TEST(Corpus, ItemsVanishOutsideRadius) {
  CorpusRecipe r;
  r.radius = 0.5;
  const GridGeometry g(1.0, 0.02);
  const std::vector<AnalyticField> fields = build_corpus(r);
  const std::vector<Grid> grids = render_corpus(fields, g);
  for (std::size_t i = 0; i < grids.size(); ++i) {
    EXPECT_GT(max_abs(grids[i]), 0.0) << fields[i].name;
    EXPECT_LE(support_estimate(grids[i], 0.0).radius, 0.5) << fields[i].name;
  }
}

TEST(Corpus, Rejects) {
  EXPECT_THROW(build_corpus(CorpusRecipe{}), PreconditionError);
  CorpusRecipe r;
  r.radius = 1.0;
  r.positions = 6;
  EXPECT_THROW(build_corpus(r), PreconditionError);
  r.positions = 5;
  r.radius_fractions = {0.9};
  EXPECT_THROW(build_corpus(r), PreconditionError);
  r.radius_fractions = {0.3};
  EXPECT_THROW(render_corpus(build_corpus(r), GridGeometry(0.5, 0.1)), DomainFitError);
}

TEST(Glyphs, MIsWTurnedHalfway) {
  const GridGeometry g(0.6, 0.02);
  const Grid w = render(glyph_w(0.5), g);
  const Grid m = render(glyph_m(0.5), g);
  EXPECT_EQ(distance(resample_affine(w, LinearMap2::rotation_degrees(180)), m, Norm::sup), 0.0);
  EXPECT_GT(distance(w, m, Norm::L1), 0.1 * norm(w, Norm::L1));
}

TEST(Glyphs, Rejects) {
  EXPECT_THROW(glyph_field({{0, 0}}, 0.1, "dot"), PreconditionError);
  EXPECT_THROW(glyph_field({{0, 0}, {1, 0}}, 0.0, "line"), PreconditionError);
}

TEST(Symmetrization, Names) {
  for (Symmetrization s : {Symmetrization::none, Symmetrization::n_fold, Symmetrization::radial}) {
    EXPECT_EQ(parse_symmetrization(to_string(s)), s);
  }
  EXPECT_THROW(parse_symmetrization("mirror"), ParseError);
}

ModelRecipe recipe(Symmetrization s, std::uint64_t seed = 9) {
  ModelRecipe r;
  r.layers = 2;
  r.channels = 3;
  r.kernel_radius = 0.25;
  r.symmetrization = s;
  r.n = 3;
  r.seed = seed;
  return r;
}

TEST(SynthesizedModel, ShapeAndDeterminism) {
  const CnnModel a = synthesize_model(recipe(Symmetrization::none)).at(0.05);
  const CnnModel b = synthesize_model(recipe(Symmetrization::none)).at(0.05);
  const CnnModel c = synthesize_model(recipe(Symmetrization::none, 10)).at(0.05);
  ASSERT_EQ(a.depth(), 2u);
  EXPECT_EQ(a.in_channels(), 1u);
  EXPECT_EQ(a.out_channels(), 3u);
  EXPECT_EQ(a.layers()[1].in_channels(), 3u);
  EXPECT_EQ(distance(a.layers()[1].kernels[2][1].grid(), b.layers()[1].kernels[2][1].grid(),
                     Norm::sup),
            0.0);
  EXPECT_GT(distance(a.layers()[0].kernels[0][0].grid(), c.layers()[0].kernels[0][0].grid(),
                     Norm::sup),
            0.0);
}

TEST(SynthesizedModel, KernelsHaveUnitPositiveMass) {
  const CnnModel m = synthesize_model(recipe(Symmetrization::none)).at(0.01);
  for (const ConvLayer& l : m.layers()) {
    for (const auto& row : l.kernels) {
      for (const Filter& k : row) {
        EXPECT_NEAR(k.l1_norm(), 1.0, 0.02);
        EXPECT_GT(k.integral(), 0.0);
        EXPECT_LE(k.support_radius(), 0.25 + 1e-12);
      }
    }
  }
}

TEST(SynthesizedModel, SymmetrizedKernelsAreFixedPoints) {
  const double h = 0.01;
  const CnnModel radial = synthesize_model(recipe(Symmetrization::radial)).at(h);
  const CnnModel nfold = synthesize_model(recipe(Symmetrization::n_fold)).at(h);
  const CnnModel plain = synthesize_model(recipe(Symmetrization::none)).at(h);
  const LinearMap2 third = LinearMap2::rotation_degrees(120);
  for (std::size_t l = 0; l < 2; ++l) {
    const Filter& r = radial.layers()[l].kernels[0][0];
    const Filter& n = nfold.layers()[l].kernels[0][0];
    const Filter& p = plain.layers()[l].kernels[0][0];
    EXPECT_LE(filter_fixed_point_residual(r, LinearMap2::rotation_degrees(37)).residual,
              tolerance_at(h));
    EXPECT_LE(filter_fixed_point_residual(n, third).residual, tolerance_at(h));
    EXPECT_GT(filter_fixed_point_residual(p, third).residual, floor_at(h));
  }
}

TEST(SynthesizedModel, SoftmaxOnlyAtTheEnd) {
  ModelRecipe r = recipe(Symmetrization::radial);
  r.nonlinearity = Nonlinearity::softmax();
  const CnnModel m = synthesize_model(r).at(0.05);
  EXPECT_EQ(m.layers()[0].nonlinearity, Nonlinearity::relu());
  EXPECT_EQ(m.layers()[1].nonlinearity, Nonlinearity::softmax());
}

TEST(SynthesizedModel, Rejects) {
  ModelRecipe r = recipe(Symmetrization::n_fold);
  r.n = 0;
  EXPECT_THROW(synthesize_model(r), PreconditionError);
  r = recipe(Symmetrization::none);
  r.channels = 0;
  EXPECT_THROW(synthesize_model(r), PreconditionError);
  r = recipe(Symmetrization::none);
  r.kernel_radius = -1;
  EXPECT_THROW(synthesize_model(r), PreconditionError);
}

TEST(FixedModel, ResamplesBetweenSpacings) {
  const CnnModel m = synthesize_model(recipe(Symmetrization::radial)).at(0.02);
  const ModelSource src = fixed_model(m, "model.json");
  EXPECT_EQ(src.description["path"], "model.json");
  const CnnModel same = src.at(0.02);
  EXPECT_EQ(distance(same.layers()[0].kernels[0][0].grid(), m.layers()[0].kernels[0][0].grid(),
                     Norm::sup),
            0.0);
  EXPECT_DOUBLE_EQ(src.at(0.04).spacing(), 0.04);
}

TEST(SingleFilterModel, IsConvolutionPlusBias) {
  const double h = 0.05;
  const Filter k = synthesize_model(recipe(Symmetrization::none)).at(h).layers()[0].kernels[0][0];
  const Grid f = make_bump({0.1, 0}, 0.3, 1.0, GridGeometry(0.8, h));
  Grid want = convolve(f, k);
  for (double& v : want.values()) v += 0.5;
  EXPECT_EQ(distance(model_forward(f, single_filter_model(k, 0.5))[0], want, Norm::sup), 0.0);
}

}  // namespace
}  // namespace equiaudit
