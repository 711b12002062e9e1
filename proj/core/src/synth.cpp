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

#include "equiaudit/synth.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <random>
#include <sstream>

#include "equiaudit/errors.hpp"

namespace equiaudit {

namespace {

// Bump centers in units of the corpus radius; none is symmetric about the origin.
constexpr Vec2 kBumpCenters[] = {
    {0.12, 0.05}, {0.3, 0.1}, {-0.2, 0.35}, {-0.35, -0.15}, {0.1, -0.4},
};

double segment_distance(Vec2 p, Vec2 a, Vec2 b) {
  const Vec2 ab = b - a;
  const double len2 = ab.x * ab.x + ab.y * ab.y;
  double t = len2 > 0.0 ? ((p.x - a.x) * ab.x + (p.y - a.y) * ab.y) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return (p - (a + ab * t)).norm();
}

std::vector<Vec2> w_polyline(double scale) {
  return {{-scale, scale}, {-0.5 * scale, -scale}, {0.0, 0.3 * scale}, {0.5 * scale, -scale},
          {scale, scale}};
}

struct Blob {
  Vec2 center;
  double radial_center = 0.0;
  double sigma = 1.0;
  double amplitude = 0.0;
};

// One analytic kernel: taper(|x| / R) * sum of blobs, scaled by `norm`.
struct KernelDef {
  std::vector<Blob> blobs;
  double radius = 0.0;
  bool radial = false;
  int fold = 1;
  double norm = 1.0;

  double base(Vec2 x) const {
    const double r = x.norm();
    const double taper = bump_profile(r / radius);
    if (taper == 0.0) return 0.0;
    double s = 0.0;
    for (const Blob& b : blobs) {
      const double d2 = radial ? (r - b.radial_center) * (r - b.radial_center)
                               : (x.x - b.center.x) * (x.x - b.center.x) +
                                     (x.y - b.center.y) * (x.y - b.center.y);
      s += b.amplitude * std::exp(-0.5 * d2 / (b.sigma * b.sigma));
    }
    return taper * s;
  }

  double operator()(Vec2 x) const {
    if (fold <= 1) return norm * base(x);
    double s = 0.0;
    for (int j = 0; j < fold; ++j) {
      s += base(LinearMap2::rotation_degrees(-360.0 * j / fold) * x);
    }
    return norm * s / fold;
  }
};

KernelDef draw_kernel(std::mt19937_64& rng, double radius, Symmetrization sym, int n) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  KernelDef k;
  k.radius = radius;
  k.radial = sym == Symmetrization::radial;
  k.fold = sym == Symmetrization::n_fold ? n : 1;
  for (int j = 0; j < 3; ++j) {
    Blob b;
    const double rho = 0.5 * radius * std::sqrt(u(rng));
    const double phi = 2.0 * std::numbers::pi * u(rng);
    b.center = {rho * std::cos(phi), rho * std::sin(phi)};
    b.radial_center = 0.6 * radius * u(rng);
    b.sigma = radius * (0.15 + 0.2 * u(rng));
    b.amplitude = j == 0 ? 0.5 + 0.5 * u(rng) : 2.0 * u(rng) - 1.0;
    k.blobs.push_back(b);
  }
  // Unit L1 mass by midpoint quadrature on a fixed fine grid. The sign makes
  // the integral positive, so non-negative images do not all die in a relu.
  constexpr int kCells = 256;
  const double cell = 2.0 * radius / kCells;
  double mass = 0.0;
  double signed_mass = 0.0;
  for (int i = 0; i < kCells; ++i) {
    for (int j = 0; j < kCells; ++j) {
      const Vec2 x{-radius + (i + 0.5) * cell, -radius + (j + 0.5) * cell};
      const double v = k(x);
      mass += std::abs(v);
      signed_mass += v;
    }
  }
  mass *= cell * cell;
  if (mass > 0.0) k.norm = (signed_mass < 0.0 ? -1.0 : 1.0) / mass;
  return k;
}

}  // namespace

AnalyticField glyph_field(const std::vector<Vec2>& polyline, double stroke, std::string name) {
  if (polyline.size() < 2) throw PreconditionError("glyph needs at least two points");
  if (!(stroke > 0.0)) throw PreconditionError("glyph stroke must be positive");
  double reach = 0.0;
  for (Vec2 p : polyline) reach = std::max(reach, p.norm());
  AnalyticField f;
  f.fn = [polyline, stroke](Vec2 x) {
    double d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < polyline.size(); ++i) {
      d = std::min(d, segment_distance(x, polyline[i], polyline[i + 1]));
    }
    return bump_profile(d / stroke);
  };
  f.support_radius = reach + stroke;
  f.name = std::move(name);
  return f;
}

AnalyticField glyph_w(double radius) {
  const double stroke = 0.12 * radius;
  const double scale = (radius - stroke) / std::numbers::sqrt2;
  return glyph_field(w_polyline(scale), stroke, "glyph_W");
}

AnalyticField glyph_m(double radius) {
  const double stroke = 0.12 * radius;
  const double scale = (radius - stroke) / std::numbers::sqrt2;
  std::vector<Vec2> pts = w_polyline(scale);
  for (Vec2& p : pts) p = -p;
  return glyph_field(pts, stroke, "glyph_M");
}

AnalyticField edge_field(double radius, double angle_degrees) {
  const double a = angle_degrees * std::numbers::pi / 180.0;
  const Vec2 n{std::cos(a), std::sin(a)};
  const double width = 0.15 * radius;
  AnalyticField f;
  f.fn = [n, width, radius](Vec2 x) {
    const double t = (n.x * x.x + n.y * x.y) / width;
    return bump_profile(x.norm() / radius) * 0.5 * (1.0 + std::tanh(t));
  };
  f.support_radius = radius;
  std::ostringstream os;
  os << "edge(" << angle_degrees << "deg)";
  f.name = os.str();
  return f;
}

std::vector<AnalyticField> build_corpus(const CorpusRecipe& recipe) {
  if (!(recipe.radius > 0.0)) throw PreconditionError("corpus radius must be positive");
  if (recipe.positions < 0 || recipe.positions > 5) {
    throw PreconditionError("corpus positions must be in 0..5");
  }
  std::vector<AnalyticField> out;
  const double rho = recipe.radius;
  for (int i = 0; i < recipe.positions; ++i) {
    for (std::size_t j = 0; j < recipe.radius_fractions.size(); ++j) {
      const double frac = recipe.radius_fractions[j];
      const Vec2 c = kBumpCenters[i] * rho;
      if (!(frac > 0.0) || c.norm() + frac * rho > rho * (1.0 + 1e-12)) {
        throw PreconditionError("corpus bump radius fraction out of range");
      }
      AnalyticField f = bump_field(c, frac * rho);
      f.name = "bump[" + std::to_string(i) + "," + std::to_string(j) + "]";
      out.push_back(std::move(f));
    }
  }
  if (recipe.edge) out.push_back(edge_field(rho, 30.0));
  if (recipe.glyphs) {
    out.push_back(glyph_w(rho));
    out.push_back(glyph_m(rho));
  }
  return out;
}

std::vector<Grid> render_corpus(const std::vector<AnalyticField>& corpus,
                                const GridGeometry& geometry) {
  std::vector<Grid> out;
  out.reserve(corpus.size());
  for (const AnalyticField& f : corpus) {
    if (f.support_radius > geometry.covered_extent()) {
      throw DomainFitError("corpus item " + f.name + " does not fit the domain",
                           f.support_radius);
    }
    out.push_back(render(f, geometry));
  }
  return out;
}

std::string to_string(Symmetrization s) {
  switch (s) {
    case Symmetrization::none:
      return "none";
    case Symmetrization::n_fold:
      return "n_fold";
    case Symmetrization::radial:
      return "radial";
  }
  return "none";
}

Symmetrization parse_symmetrization(const std::string& text) {
  if (text == "none") return Symmetrization::none;
  if (text == "n_fold") return Symmetrization::n_fold;
  if (text == "radial") return Symmetrization::radial;
  throw ParseError("unknown symmetrization '" + text + "' (none, n_fold, radial)");
}

ModelSource synthesize_model(const ModelRecipe& recipe) {
  if (recipe.layers < 0 || recipe.channels < 1) {
    throw PreconditionError("model recipe needs layers >= 0 and channels >= 1");
  }
  if (!(recipe.kernel_radius > 0.0)) throw PreconditionError("kernel radius must be positive");
  if (recipe.symmetrization == Symmetrization::n_fold && recipe.n < 1) {
    throw PreconditionError("n_fold symmetrization needs n >= 1");
  }
  std::mt19937_64 rng(recipe.seed);
  // defs[layer][m][c]
  auto defs = std::make_shared<std::vector<std::vector<std::vector<KernelDef>>>>();
  for (int l = 0; l < recipe.layers; ++l) {
    const int in = l == 0 ? 1 : recipe.channels;
    auto& layer = defs->emplace_back(in);
    for (int m = 0; m < in; ++m) {
      for (int c = 0; c < recipe.channels; ++c) {
        layer[m].push_back(
            draw_kernel(rng, recipe.kernel_radius, recipe.symmetrization, recipe.n));
      }
    }
  }
  const bool softmax = recipe.nonlinearity.kind == Nonlinearity::Kind::softmax;
  const Nonlinearity hidden = softmax ? Nonlinearity::relu() : recipe.nonlinearity;
  const Nonlinearity last = recipe.nonlinearity;
  const double bias = recipe.bias;
  const double radius = recipe.kernel_radius;

  ModelSource src;
  src.at = [defs, hidden, last, bias, radius](double spacing) {
    std::vector<ConvLayer> layers;
    for (std::size_t l = 0; l < defs->size(); ++l) {
      ConvLayer layer;
      for (const auto& row : (*defs)[l]) {
        std::vector<Filter> filters;
        for (const KernelDef& k : row) filters.push_back(make_filter(k, radius, spacing));
        layer.kernels.push_back(std::move(filters));
      }
      layer.biases.assign((*defs)[l].front().size(), bias);
      layer.nonlinearity = l + 1 == defs->size() ? last : hidden;
      layers.push_back(std::move(layer));
    }
    return CnnModel(std::move(layers));
  };
  src.description = {{"kind", "synthesized"},
                     {"layers", recipe.layers},
                     {"channels", recipe.channels},
                     {"kernel_radius", recipe.kernel_radius},
                     {"nonlinearity", to_string(recipe.nonlinearity)},
                     {"symmetrization", to_string(recipe.symmetrization)},
                     {"n", recipe.n},
                     {"bias", recipe.bias},
                     {"seed", recipe.seed}};
  return src;
}

ModelSource fixed_model(CnnModel model, std::string origin) {
  auto m = std::make_shared<const CnnModel>(std::move(model));
  ModelSource src;
  src.at = [m](double spacing) {
    if (m->depth() == 0) return *m;
    return resample_model(*m, spacing);
  };
  src.description = {{"kind", "file"},
                     {"path", std::move(origin)},
                     {"layers", m->depth()},
                     {"spacing", m->spacing()}};
  return src;
}

CnnModel single_filter_model(const Filter& lambda, double bias) {
  ConvLayer layer;
  layer.kernels = {{lambda}};
  layer.biases = {bias};
  layer.nonlinearity = Nonlinearity::identity();
  return CnnModel({layer});
}

}  // namespace equiaudit
