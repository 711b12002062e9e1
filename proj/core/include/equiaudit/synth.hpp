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

#ifndef EQUIAUDIT_SYNTH_HPP
#define EQUIAUDIT_SYNTH_HPP

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "equiaudit/conv.hpp"
#include "equiaudit/grid.hpp"

/**
 * \file
 * \brief Test images and synthetic models defined analytically, so the same
 * object can be sampled at every spacing of a refinement study.
 */

namespace equiaudit {

struct CorpusRecipe {
  /// Every item vanishes outside this radius; 0 lets the auditor choose.
  double radius = 0.0;
  /// Bump centers used, 0..5, from a fixed asymmetric list.
  int positions = 5;
  /// Bump radii as fractions of `radius`.
  std::vector<double> radius_fractions = {0.25, 0.4, 0.55};
  bool edge = true;
  bool glyphs = true;
};

/// Bumps, an oriented edge and the W / M glyph pair, in that order.
std::vector<AnalyticField> build_corpus(const CorpusRecipe& recipe);
std::vector<Grid> render_corpus(const std::vector<AnalyticField>& corpus,
                                const GridGeometry& geometry);

/// Polyline glyph drawn with a smooth stroke of half-width `stroke`.
AnalyticField glyph_field(const std::vector<Vec2>& polyline, double stroke, std::string name);
/// The W glyph scaled to fit the ball of radius `radius`; M is W turned by 180 degrees.
AnalyticField glyph_w(double radius);
AnalyticField glyph_m(double radius);

/// Smooth oriented edge across the ball of radius `radius`.
AnalyticField edge_field(double radius, double angle_degrees);

enum class Symmetrization { none, n_fold, radial };

std::string to_string(Symmetrization s);
Symmetrization parse_symmetrization(const std::string& text);

struct ModelRecipe {
  int layers = 2;
  int channels = 2;
  double kernel_radius = 0.3;
  /// Hidden and output nonlinearity; with softmax the hidden layers use relu.
  Nonlinearity nonlinearity = Nonlinearity::relu();
  Symmetrization symmetrization = Symmetrization::radial;
  /// Order for n_fold symmetrization (rotation by 360/n degrees).
  int n = 4;
  double bias = 0.0;
  std::uint64_t seed = 1;
};

/// A model known at any spacing.
struct ModelSource {
  std::function<CnnModel(double spacing)> at;
  nlohmann::json description;
};

/**
 * Random smooth kernels: each is a tapered sum of three Gaussian blobs,
 * normalized to unit L1 mass with a positive integral. Radial kernels use radial blobs; n_fold kernels
 * are averaged over the n rotations before sampling.
 */
ModelSource synthesize_model(const ModelRecipe& recipe);

/// A loaded model; other spacings are reached by bilinear transfer.
ModelSource fixed_model(CnnModel model, std::string origin);

/// A one-layer identity-activation model with a single kernel.
CnnModel single_filter_model(const Filter& lambda, double bias = 0.0);

}  // namespace equiaudit

#endif  // EQUIAUDIT_SYNTH_HPP
