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

#include "equiaudit/conv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>
#include <utility>

#include "equiaudit/errors.hpp"

namespace equiaudit {

namespace {

constexpr double kRadiusSlack = 1e-9;

bool same_spacing(double a, double b) noexcept {
  return std::abs(a - b) <= 1e-12 * std::max(a, b);
}

void require_spacing(const Grid& f, const Filter& lambda) {
  if (!same_spacing(f.spacing(), lambda.spacing())) {
    std::ostringstream os;
    os << "convolution spacing mismatch: image " << f.spacing() << ", filter "
       << lambda.spacing();
    throw GeometryMismatchError(os.str());
  }
}

// Largest |x| (physical) among nonzero samples.
double measured_radius(const Grid& g) {
  const int k = g.half_count();
  double r2 = 0.0;
  for (int y = -k; y <= k; ++y) {
    for (int x = -k; x <= k; ++x) {
      if (g.at(x, y) != 0.0) {
        r2 = std::max(r2, static_cast<double>(x) * x + static_cast<double>(y) * y);
      }
    }
  }
  return std::sqrt(r2) * g.spacing();
}

// Copies g onto a larger lattice with the same spacing (exact).
Grid embed(const Grid& g, const GridGeometry& geometry) {
  Grid out(geometry);
  const int k = std::min(g.half_count(), geometry.half_count());
  for (int y = -k; y <= k; ++y) {
    for (int x = -k; x <= k; ++x) out.at(x, y) = g.at(x, y);
  }
  return out;
}

// out += lambda * f over the whole grid; taps outer, contiguous rows inner.
void accumulate(const Grid& f, const Filter& lambda, std::vector<double>& acc) {
  const int k = f.half_count();
  const std::ptrdiff_t s = f.side();
  const double* in = f.values().data();
  double* out = acc.data();
  for (const Tap& t : lambda.taps()) {
    const int xlo = std::max(-k, -k + t.dx);
    const int xhi = std::min(k, k + t.dx);
    const int ylo = std::max(-k, -k + t.dy);
    const int yhi = std::min(k, k + t.dy);
    if (xlo > xhi || ylo > yhi) continue;
    const double w = t.weight;
    const std::ptrdiff_t n = xhi - xlo + 1;
    for (int y = ylo; y <= yhi; ++y) {
      double* orow = out + (k - y) * s + (xlo + k);
      const double* irow = in + (k - (y - t.dy)) * s + (xlo - t.dx + k);
      for (std::ptrdiff_t i = 0; i < n; ++i) orow[i] += w * irow[i];
    }
  }
}

void softmax_inplace(std::vector<double>& a) {
  double m = a.front();
  for (double v : a) m = std::max(m, v);
  double sum = 0.0;
  for (double& v : a) {
    v = std::exp(v - m);
    sum += v;
  }
  for (double& v : a) v /= sum;
}

}  // namespace

// ---------------------------------------------------------------- Filter

Filter::Filter(Grid grid, double support_radius)
    : grid_(std::move(grid)), support_radius_(support_radius) {
  if (!(support_radius_ >= 0.0)) throw PreconditionError("filter support radius must be >= 0");
  const double h = grid_.spacing();
  if (support_radius_ > grid_.geometry().covered_extent() * (1.0 + kRadiusSlack)) {
    throw PreconditionError("filter support radius exceeds the filter grid");
  }
  const double lim = support_radius_ / h * (1.0 + kRadiusSlack) + 1e-9;
  const double lim2 = lim * lim;
  const int k = grid_.half_count();
  for (int y = k; y >= -k; --y) {
    for (int x = -k; x <= k; ++x) {
      const double v = grid_.at(x, y);
      if (v == 0.0) continue;
      if (!std::isfinite(v)) throw PreconditionError("filter samples must be finite");
      if (static_cast<double>(x) * x + static_cast<double>(y) * y > lim2) {
        std::ostringstream os;
        os << "filter sample at (" << x * h << ", " << y * h << ") lies outside support radius "
           << support_radius_;
        throw PreconditionError(os.str());
      }
      taps_.push_back({x, y, v * h * h});
      reach_ = std::max({reach_, std::abs(x), std::abs(y)});
    }
  }
}

double Filter::integral() const { return equiaudit::integral(grid_); }
double Filter::l1_norm() const { return norm(grid_, Norm::L1); }

Filter make_filter(const std::function<double(Vec2)>& fn, double support_radius, double spacing) {
  if (!(support_radius >= 0.0)) throw PreconditionError("filter support radius must be >= 0");
  const GridGeometry geometry(std::max(support_radius, spacing), spacing);
  Grid g(geometry);
  const int k = geometry.half_count();
  const double lim2 = (support_radius / spacing) * (support_radius / spacing);
  for (int y = -k; y <= k; ++y) {
    for (int x = -k; x <= k; ++x) {
      if (static_cast<double>(x) * x + static_cast<double>(y) * y > lim2) continue;
      g.at(x, y) = fn(g.position(x, y));
    }
  }
  return Filter(std::move(g), support_radius);
}

Filter impulse_filter(double spacing) {
  Grid g(GridGeometry(spacing, spacing));
  g.at(0, 0) = 1.0 / (spacing * spacing);
  return Filter(std::move(g), 0.0);
}

Filter zero_filter(double support_radius, double spacing) {
  return Filter(Grid(GridGeometry(std::max(support_radius, spacing), spacing)), support_radius);
}

Filter radial_filter(const std::function<double(double)>& profile, double support_radius,
                     double spacing) {
  return make_filter([&profile](Vec2 x) { return profile(x.norm()); }, support_radius, spacing);
}

Filter elliptic_ring_filter(const LinearMap2& b, const std::function<double(double)>& profile,
                            double profile_radius, double spacing) {
  // |Bx| <= rho implies |x| <= ||B^-1|| rho.
  const double radius = operator_norm(inverse(b)) * profile_radius;
  const GridGeometry geometry(std::max(radius, spacing), spacing);
  Grid g(geometry);
  const int k = geometry.half_count();
  for (int y = -k; y <= k; ++y) {
    for (int x = -k; x <= k; ++x) {
      const double r = (b * g.position(x, y)).norm();
      if (r > profile_radius) continue;
      g.at(x, y) = profile(r);
    }
  }
  return Filter(std::move(g), std::max(radius, measured_radius(g)));
}

Filter transform_filter(const Filter& lambda, const LinearMap2& t) {
  const LinearMap2 inv = inverse(t);
  const double h = lambda.spacing();
  const double r = lambda.support_radius();
  const double bound = operator_norm(inv) * r;
  const double need = operator_norm(inv) * (r + 1.5 * h) + h;
  const GridGeometry geometry(std::max({lambda.grid().geometry().covered_extent(), need, h}), h);
  // resample_affine(g, T^-1) reads g at T x.
  Grid warped = resample_affine(embed(lambda.grid(), geometry), inv);
  warped *= std::abs(t.det());
  return Filter(std::move(warped), std::max(bound, measured_radius(warped)));
}

Filter n_fold_symmetrize(const Filter& lambda, const LinearMap2& t, int n) {
  if (n < 1) throw PreconditionError("symmetrization order must be >= 1");
  const LinearMap2 tn = iterate(t, n);
  if (max_abs_difference(tn, LinearMap2::identity()) > 1e-9 * std::max(1.0, operator_norm(t))) {
    throw ClassificationError("transform " + to_string(t) + " does not satisfy T^" +
                              std::to_string(n) + " = I");
  }
  if (n == 1) return lambda;
  const double h = lambda.spacing();
  double grow = 1.0;
  for (int j = 1; j < n; ++j) grow = std::max(grow, operator_norm(iterate(t, j)));
  const double need = grow * (lambda.support_radius() + 1.5 * h) + h;
  const GridGeometry geometry(std::max({lambda.grid().geometry().covered_extent(), need, h}), h);
  const Grid base = embed(lambda.grid(), geometry);
  Grid sum = base;
  LinearMap2 power = LinearMap2::identity();
  for (int j = 1; j < n; ++j) {
    power = t * power;
    sum += resample_affine(base, power);
  }
  sum *= 1.0 / n;
  return Filter(std::move(sum), std::max(grow * lambda.support_radius(), measured_radius(sum)));
}

Filter resample_filter(const Filter& lambda, double spacing) {
  if (same_spacing(spacing, lambda.spacing())) return lambda;
  const double r = lambda.support_radius();
  const GridGeometry geometry(std::max(lambda.grid().geometry().covered_extent(), spacing),
                              spacing);
  return Filter(restrict_to_ball(resample_to(lambda.grid(), geometry), r), r);
}

// ---------------------------------------------------------------- convolution

Grid convolve(const Grid& f, const Filter& lambda) {
  require_spacing(f, lambda);
  std::vector<double> acc(f.geometry().sample_count(), 0.0);
  accumulate(f, lambda, acc);
  return Grid(f.geometry(), std::move(acc));
}

double convolve_at(const Grid& f, const Filter& lambda, LatticePoint p) {
  require_spacing(f, lambda);
  double acc = 0.0;
  for (const Tap& t : lambda.taps()) {
    const int x = p.x - t.dx;
    const int y = p.y - t.dy;
    if (f.contains(x, y)) acc += t.weight * f.at(x, y);
  }
  return acc;
}

// ---------------------------------------------------------------- stacks

FeatureStack::FeatureStack(std::vector<Grid> channels) : channels_(std::move(channels)) {
  for (const Grid& g : channels_) {
    if (!g.geometry().same_lattice(channels_.front().geometry())) {
      throw GeometryMismatchError("feature stack channels must share geometry");
    }
  }
}

FeatureStack::FeatureStack(Grid single) { channels_.push_back(std::move(single)); }

const GridGeometry& FeatureStack::geometry() const {
  if (channels_.empty()) throw PreconditionError("empty feature stack has no geometry");
  return channels_.front().geometry();
}

// ---------------------------------------------------------------- nonlinearity

double Nonlinearity::apply(double x) const noexcept {
  switch (kind) {
    case Kind::relu:
      return x > 0.0 ? x : 0.0;
    case Kind::sigmoid:
      return 1.0 / (1.0 + std::exp(-4.0 * lipschitz * x));
    case Kind::identity:
    case Kind::softmax:
      break;
  }
  return x;
}

std::string to_string(const Nonlinearity& nl) {
  switch (nl.kind) {
    case Nonlinearity::Kind::identity:
      return "identity";
    case Nonlinearity::Kind::relu:
      return "relu";
    case Nonlinearity::Kind::softmax:
      return "softmax";
    case Nonlinearity::Kind::sigmoid: {
      std::ostringstream os;
      os.precision(17);
      os << "sigmoid:" << nl.lipschitz;
      return os.str();
    }
  }
  return "identity";
}

Nonlinearity parse_nonlinearity(const std::string& text) {
  if (text == "identity" || text == "none") return Nonlinearity::identity();
  if (text == "relu") return Nonlinearity::relu();
  if (text == "softmax") return Nonlinearity::softmax();
  if (text == "sigmoid") return Nonlinearity::sigmoid();
  if (text.rfind("sigmoid:", 0) == 0) {
    const std::string arg = text.substr(8);
    double l = 0.0;
    const auto res = std::from_chars(arg.data(), arg.data() + arg.size(), l);
    if (res.ec != std::errc() || res.ptr != arg.data() + arg.size() || !(l > 0.0)) {
      throw ParseError("bad sigmoid Lipschitz constant in '" + text + "'");
    }
    return Nonlinearity::sigmoid(l);
  }
  throw ParseError("unknown nonlinearity '" + text + "'");
}

// ---------------------------------------------------------------- model

CnnModel::CnnModel(std::vector<ConvLayer> layers) : layers_(std::move(layers)) {
  double spacing = 0.0;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const ConvLayer& layer = layers_[i];
    const std::string where = "layer " + std::to_string(i) + ": ";
    if (layer.in_channels() == 0 || layer.out_channels() == 0) {
      throw PreconditionError(where + "needs at least one input and one output channel");
    }
    if (i > 0 && layer.in_channels() != layers_[i - 1].out_channels()) {
      throw PreconditionError(where + "input channels do not match the previous layer");
    }
    if (layer.nonlinearity.kind == Nonlinearity::Kind::softmax && i + 1 != layers_.size()) {
      throw PreconditionError(where + "softmax is only allowed in the final layer");
    }
    for (const auto& row : layer.kernels) {
      if (row.size() != layer.out_channels()) {
        throw PreconditionError(where + "kernel matrix is not " +
                                std::to_string(layer.in_channels()) + "x" +
                                std::to_string(layer.out_channels()));
      }
      for (const Filter& k : row) {
        if (spacing == 0.0) spacing = k.spacing();
        if (!same_spacing(spacing, k.spacing())) {
          throw PreconditionError(where + "kernels must share one spacing");
        }
      }
    }
  }
}

std::size_t CnnModel::in_channels() const noexcept {
  return layers_.empty() ? 1 : layers_.front().in_channels();
}

std::size_t CnnModel::out_channels() const noexcept {
  return layers_.empty() ? 1 : layers_.back().out_channels();
}

double CnnModel::spacing() const noexcept {
  return layers_.empty() ? 0.0 : layers_.front().kernels.front().front().spacing();
}

FeatureStack layer_forward(const FeatureStack& x, const ConvLayer& layer) {
  if (x.size() != layer.in_channels()) {
    throw PreconditionError("layer expects " + std::to_string(layer.in_channels()) +
                            " channels, got " + std::to_string(x.size()));
  }
  const GridGeometry& geometry = x.geometry();
  const std::size_t n = geometry.sample_count();
  std::vector<std::vector<double>> pre(layer.out_channels());
  for (std::size_t c = 0; c < layer.out_channels(); ++c) {
    std::vector<double>& acc = pre[c];
    acc.assign(n, 0.0);
    for (std::size_t m = 0; m < layer.in_channels(); ++m) {
      require_spacing(x[m], layer.kernels[m][c]);
      accumulate(x[m], layer.kernels[m][c], acc);
    }
    const double b = layer.biases[c];
    for (double& v : acc) v += b;
  }
  if (layer.nonlinearity.kind == Nonlinearity::Kind::softmax) {
    std::vector<double> px(layer.out_channels());
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t c = 0; c < px.size(); ++c) px[c] = pre[c][i];
      softmax_inplace(px);
      for (std::size_t c = 0; c < px.size(); ++c) pre[c][i] = px[c];
    }
  } else if (layer.nonlinearity.kind != Nonlinearity::Kind::identity) {
    for (auto& acc : pre) {
      for (double& v : acc) v = layer.nonlinearity.apply(v);
    }
  }
  std::vector<Grid> out;
  out.reserve(pre.size());
  for (auto& acc : pre) out.emplace_back(geometry, std::move(acc));
  return FeatureStack(std::move(out));
}

FeatureStack model_forward(const FeatureStack& f, const CnnModel& model) {
  FeatureStack x = f;
  for (const ConvLayer& layer : model.layers()) x = layer_forward(x, layer);
  return x;
}

FeatureStack model_forward(const Grid& f, const CnnModel& model) {
  return model_forward(FeatureStack(f), model);
}

std::vector<FeatureStack> model_trace(const Grid& f, const CnnModel& model) {
  std::vector<FeatureStack> trace;
  trace.reserve(model.depth() + 1);
  trace.emplace_back(f);
  for (const ConvLayer& layer : model.layers()) trace.push_back(layer_forward(trace.back(), layer));
  return trace;
}

namespace {

// Square patch of one feature channel around a center point.
struct Window {
  LatticePoint center;
  int half = 0;
  std::vector<double> values;

  double get(int x, int y) const {
    const int side = 2 * half + 1;
    return values[static_cast<std::size_t>(y - center.y + half) * side + (x - center.x + half)];
  }
};

int layer_reach(const ConvLayer& layer) {
  int r = 0;
  for (const auto& row : layer.kernels) {
    for (const Filter& k : row) r = std::max(r, k.reach());
  }
  return r;
}

}  // namespace

double evaluate_at(const Grid& f, const CnnModel& model, std::size_t depth, std::size_t channel,
                   LatticePoint p) {
  if (depth > model.depth()) throw PreconditionError("evaluation depth exceeds model depth");
  if (depth == 0) {
    if (channel != 0) throw PreconditionError("depth 0 has a single channel");
    return f.value(p);
  }
  const auto& layers = model.layers();
  if (channel >= layers[depth - 1].out_channels()) {
    throw PreconditionError("channel index out of range");
  }
  if (!f.contains(p)) return 0.0;
  if (layers.front().in_channels() != 1) {
    throw PreconditionError("point evaluation takes a single input channel");
  }
  for (std::size_t i = 0; i < depth; ++i) {
    if (!same_spacing(f.spacing(), layers[i].kernels.front().front().spacing())) {
      throw GeometryMismatchError("image and model spacing differ");
    }
  }

  // half[i] is the window half-width of the output of layer i (1-based).
  std::vector<int> half(depth + 1, 0);
  for (std::size_t i = depth; i > 1; --i) half[i - 1] = half[i] + layer_reach(layers[i - 1]);

  std::vector<Window> prev;  // outputs of the previous layer; empty means f
  for (std::size_t i = 1; i <= depth; ++i) {
    const ConvLayer& layer = layers[i - 1];
    const int w = half[i];
    const int side = 2 * w + 1;
    const bool last = i == depth;
    const bool softmax = layer.nonlinearity.kind == Nonlinearity::Kind::softmax;
    std::vector<Window> cur(layer.out_channels());
    for (auto& win : cur) {
      win.center = p;
      win.half = w;
      win.values.assign(static_cast<std::size_t>(side) * side, 0.0);
    }
    std::vector<std::size_t> channels;
    if (last && !softmax) {
      channels.push_back(channel);
    } else {
      for (std::size_t c = 0; c < layer.out_channels(); ++c) channels.push_back(c);
    }
    std::vector<double> px(layer.out_channels());
    for (int y = p.y - w; y <= p.y + w; ++y) {
      for (int x = p.x - w; x <= p.x + w; ++x) {
        if (!f.contains(x, y)) continue;
        for (std::size_t c : channels) {
          double acc = 0.0;
          for (std::size_t m = 0; m < layer.in_channels(); ++m) {
            for (const Tap& t : layer.kernels[m][c].taps()) {
              const int sx = x - t.dx;
              const int sy = y - t.dy;
              if (!f.contains(sx, sy)) continue;
              acc += t.weight * (prev.empty() ? f.at(sx, sy) : prev[m].get(sx, sy));
            }
          }
          px[c] = acc + layer.biases[c];
        }
        if (softmax) {
          softmax_inplace(px);
        } else if (layer.nonlinearity.kind != Nonlinearity::Kind::identity) {
          for (std::size_t c : channels) px[c] = layer.nonlinearity.apply(px[c]);
        }
        const std::size_t idx = static_cast<std::size_t>(y - p.y + w) * side + (x - p.x + w);
        for (std::size_t c : channels) cur[c].values[idx] = px[c];
      }
    }
    prev = std::move(cur);
  }
  return prev[channel].values.front();
}

double receptive_radius(const CnnModel& model, std::size_t depth) {
  if (depth > model.depth()) throw PreconditionError("depth exceeds model depth");
  std::vector<double> r(model.in_channels(), 0.0);
  for (std::size_t i = 0; i < depth; ++i) {
    const ConvLayer& layer = model.layers()[i];
    std::vector<double> next(layer.out_channels(), 0.0);
    for (std::size_t c = 0; c < layer.out_channels(); ++c) {
      for (std::size_t m = 0; m < layer.in_channels(); ++m) {
        next[c] = std::max(next[c], r[m] + layer.kernels[m][c].support_radius());
      }
    }
    r = std::move(next);
  }
  double out = 0.0;
  for (double v : r) out = std::max(out, v);
  return out;
}

CnnModel resample_model(const CnnModel& model, double spacing) {
  std::vector<ConvLayer> layers = model.layers();
  for (ConvLayer& layer : layers) {
    for (auto& row : layer.kernels) {
      for (Filter& k : row) k = resample_filter(k, spacing);
    }
  }
  return CnnModel(std::move(layers));
}

}  // namespace equiaudit
