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

#ifndef EQUIAUDIT_CONV_HPP
#define EQUIAUDIT_CONV_HPP

#include <functional>
#include <string>
#include <vector>

#include "equiaudit/grid.hpp"
#include "equiaudit/transform.hpp"

/**
 * \file
 * \brief Direct convolution and the continuous CNN model discretized on grids.
 *
 * Every output sample is accumulated in a fixed order: input channel, then
 * filter taps in row-major order, skipping taps whose filter value is zero.
 * Full-grid, windowed and single-point evaluation therefore agree bit for bit
 * wherever their inputs agree, which makes translation covariance and
 * semi-locality exact properties of the implementation.
 */

namespace equiaudit {

/// One nonzero filter sample: lattice offset and weight lambda(y) * h^2.
struct Tap {
  int dx = 0;
  int dy = 0;
  double weight = 0.0;
};

/// A compactly supported kernel stored at image spacing.
class Filter {
 public:
  /// Throws PreconditionError if a sample outside `support_radius` is nonzero
  /// or the radius exceeds the grid's covered extent.
  Filter(Grid grid, double support_radius);

  const Grid& grid() const noexcept { return grid_; }
  double spacing() const noexcept { return grid_.spacing(); }
  double support_radius() const noexcept { return support_radius_; }
  const std::vector<Tap>& taps() const noexcept { return taps_; }
  /// Largest |dx|, |dy| over the taps, in samples.
  int reach() const noexcept { return reach_; }

  /// Riemann integral of the kernel.
  double integral() const;
  double l1_norm() const;

 private:
  Grid grid_;
  double support_radius_;
  std::vector<Tap> taps_;
  int reach_ = 0;
};

/// Filter of the given radius sampled from fn at `spacing`.
Filter make_filter(const std::function<double(Vec2)>& fn, double support_radius, double spacing);
/// Single sample 1/h^2 at the origin: the discrete unit impulse.
Filter impulse_filter(double spacing);
Filter zero_filter(double support_radius, double spacing);

/// lambda(x) = profile(|x|) for |x| <= support_radius.
Filter radial_filter(const std::function<double(double)>& profile, double support_radius,
                     double spacing);

/// lambda(x) = profile(|Bx|), supported where |Bx| <= profile_radius.
Filter elliptic_ring_filter(const LinearMap2& b, const std::function<double(double)>& profile,
                            double profile_radius, double spacing);

/// |det T| * lambda(T x): the kernel that makes T^-1 conv_lambda T a convolution.
/// The grid grows when the warped support needs it.
Filter transform_filter(const Filter& lambda, const LinearMap2& t);

/// (1/n) sum_{j<n} lambda(T^-j x); requires T^n = I.
Filter n_fold_symmetrize(const Filter& lambda, const LinearMap2& t, int n);

/// Bilinear transfer of a filter to another spacing.
Filter resample_filter(const Filter& lambda, double spacing);

/// output(x) = sum_y lambda(y) f(x - y) h^2 with zero reads outside f.
Grid convolve(const Grid& f, const Filter& lambda);
/// One output sample of convolve(), same bits.
double convolve_at(const Grid& f, const Filter& lambda, LatticePoint p);

/// Channels sharing one geometry.
class FeatureStack {
 public:
  FeatureStack() = default;
  explicit FeatureStack(std::vector<Grid> channels);
  explicit FeatureStack(Grid single);

  std::size_t size() const noexcept { return channels_.size(); }
  bool empty() const noexcept { return channels_.empty(); }
  const Grid& operator[](std::size_t i) const { return channels_.at(i); }
  Grid& operator[](std::size_t i) { return channels_.at(i); }
  const std::vector<Grid>& channels() const noexcept { return channels_; }
  const GridGeometry& geometry() const;

 private:
  std::vector<Grid> channels_;
};

struct Nonlinearity {
  enum class Kind { identity, relu, sigmoid, softmax };
  Kind kind = Kind::identity;
  /// Lipschitz constant of the sigmoid 1 / (1 + exp(-4 L x)).
  double lipschitz = 1.0;

  static Nonlinearity identity() { return {Kind::identity, 1.0}; }
  static Nonlinearity relu() { return {Kind::relu, 1.0}; }
  static Nonlinearity sigmoid(double lipschitz = 1.0) { return {Kind::sigmoid, lipschitz}; }
  static Nonlinearity softmax() { return {Kind::softmax, 1.0}; }

  /// Pointwise kinds only.
  double apply(double x) const noexcept;
  bool operator==(const Nonlinearity&) const = default;
};

/// "identity", "relu", "sigmoid:<L>" or "softmax".
std::string to_string(const Nonlinearity& nl);
/// Inverse of to_string; "sigmoid" alone means L = 1. Throws ParseError.
Nonlinearity parse_nonlinearity(const std::string& text);

struct ConvLayer {
  /// kernels[m][c] maps input channel m to output channel c.
  std::vector<std::vector<Filter>> kernels;
  std::vector<double> biases;
  Nonlinearity nonlinearity;

  std::size_t in_channels() const noexcept { return kernels.size(); }
  std::size_t out_channels() const noexcept { return biases.size(); }
};

class CnnModel {
 public:
  CnnModel() = default;
  /// Validates channel counts, spacing and softmax placement.
  explicit CnnModel(std::vector<ConvLayer> layers);

  const std::vector<ConvLayer>& layers() const noexcept { return layers_; }
  std::size_t depth() const noexcept { return layers_.size(); }
  std::size_t in_channels() const noexcept;
  std::size_t out_channels() const noexcept;
  /// Kernel spacing, 0 for the empty model.
  double spacing() const noexcept;

 private:
  std::vector<ConvLayer> layers_;
};

/// sigma_c(sum_m conv(x_m, lambda_{m,c}) + b_c) for each output channel.
FeatureStack layer_forward(const FeatureStack& x, const ConvLayer& layer);

/// Output of the last layer; the empty model returns the input.
FeatureStack model_forward(const Grid& f, const CnnModel& model);
FeatureStack model_forward(const FeatureStack& f, const CnnModel& model);
/// Intermediate stacks: element i is the output after i layers (element 0 is f).
std::vector<FeatureStack> model_trace(const Grid& f, const CnnModel& model);

/**
 * Channel `channel` of the first `depth` layers at lattice point p, computed on
 * the smallest windows that cover the receptive field. Intermediate samples
 * outside f's domain are zero, as in model_forward().
 */
double evaluate_at(const Grid& f, const CnnModel& model, std::size_t depth, std::size_t channel,
                   LatticePoint p);

/// r(0) = 0, r_c(i) = max_m [r_m(i - 1) + r(lambda_{m,c})], maximized over c.
double receptive_radius(const CnnModel& model, std::size_t depth);

/// The same model with every kernel transferred to another spacing.
CnnModel resample_model(const CnnModel& model, double spacing);

}  // namespace equiaudit

#endif  // EQUIAUDIT_CONV_HPP
