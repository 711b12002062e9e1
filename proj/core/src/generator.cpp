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

#include "equiaudit/generator.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <utility>

#include "equiaudit/errors.hpp"

namespace equiaudit {

OperatorHandle::OperatorHandle(std::string name, Apply apply, PointEval point,
                               std::optional<double> declared_radius)
    : name_(std::move(name)),
      apply_(std::move(apply)),
      point_(std::move(point)),
      declared_radius_(declared_radius) {
  if (!apply_) throw PreconditionError("operator needs an apply function");
}

double OperatorHandle::at(const Grid& f, LatticePoint p) const {
  if (!f.contains(p)) return 0.0;
  if (point_) return point_(f, p);
  return apply_(f).at(p.x, p.y);
}

double OperatorHandle::at_lattice(const Grid& f, double sx, double sy) const {
  // Mirrors Grid::sample_lattice term by term so both routes agree bit for bit.
  const double lim = f.half_count() + 1.0;
  if (!(std::abs(sx) < lim) || !(std::abs(sy) < lim)) return 0.0;
  const double fx0 = std::floor(sx);
  const double fy0 = std::floor(sy);
  const double fx = sx - fx0;
  const double fy = sy - fy0;
  const int x0 = static_cast<int>(fx0);
  const int y0 = static_cast<int>(fy0);
  if (!point_) return apply_(f).sample_lattice(sx, sy);
  auto v = [&](int x, int y) { return at(f, {x, y}); };
  if (fx == 0.0 && fy == 0.0) return v(x0, y0);
  if (fy == 0.0) return (1.0 - fx) * v(x0, y0) + fx * v(x0 + 1, y0);
  if (fx == 0.0) return (1.0 - fy) * v(x0, y0) + fy * v(x0, y0 + 1);
  return (1.0 - fx) * (1.0 - fy) * v(x0, y0) + fx * (1.0 - fy) * v(x0 + 1, y0) +
         (1.0 - fx) * fy * v(x0, y0 + 1) + fx * fy * v(x0 + 1, y0 + 1);
}

OperatorHandle identity_operator() {
  return OperatorHandle(
      "identity", [](const Grid& f) { return f; },
      [](const Grid& f, LatticePoint p) { return f.value(p); }, 0.0);
}

OperatorHandle constant_operator(double value) {
  std::ostringstream os;
  os << "constant(" << value << ")";
  return OperatorHandle(
      os.str(),
      [value](const Grid& f) {
        Grid out(f.geometry());
        for (double& v : out.values()) v = value;
        return out;
      },
      [value](const Grid&, LatticePoint) { return value; }, 0.0);
}

OperatorHandle convolution_operator(Filter lambda) {
  auto k = std::make_shared<const Filter>(std::move(lambda));
  std::ostringstream os;
  os << "convolution(r=" << k->support_radius() << ")";
  return OperatorHandle(
      os.str(), [k](const Grid& f) { return convolve(f, *k); },
      [k](const Grid& f, LatticePoint p) { return convolve_at(f, *k, p); }, k->support_radius());
}

OperatorHandle cnn_operator(std::shared_ptr<const CnnModel> model, std::size_t depth,
                            std::size_t channel) {
  if (!model) throw PreconditionError("null model");
  if (depth > model->depth()) throw PreconditionError("operator depth exceeds model depth");
  const std::size_t channels = depth == 0 ? 1 : model->layers()[depth - 1].out_channels();
  if (channel >= channels) throw PreconditionError("operator channel out of range");
  auto truncated = std::make_shared<const CnnModel>(std::vector<ConvLayer>(
      model->layers().begin(), model->layers().begin() + static_cast<std::ptrdiff_t>(depth)));
  std::ostringstream os;
  os << "cnn(depth=" << depth << ",channel=" << channel << ")";
  return OperatorHandle(
      os.str(),
      [truncated, channel](const Grid& f) { return model_forward(f, *truncated)[channel]; },
      [truncated, depth, channel](const Grid& f, LatticePoint p) {
        return evaluate_at(f, *truncated, depth, channel, p);
      },
      receptive_radius(*model, depth));
}

OperatorHandle cnn_operator(const CnnModel& model, std::size_t depth, std::size_t channel) {
  return cnn_operator(std::make_shared<const CnnModel>(model), depth, channel);
}

OperatorHandle global_average_operator() {
  auto mean = [](const Grid& f) {
    return pairwise_sum(f.values()) / static_cast<double>(f.values().size());
  };
  return OperatorHandle(
      "global_average",
      [mean](const Grid& f) {
        Grid out(f.geometry());
        const double m = mean(f);
        for (double& v : out.values()) v = m;
        return out;
      },
      [mean](const Grid& f, LatticePoint) { return mean(f); });
}

OperatorHandle conjugate_operator(const OperatorHandle& inner, const LinearMap2& t) {
  const LinearMap2 inv = inverse(t);
  // resample_affine(g, inv) reads g at inverse(inv) * x; use the same matrix.
  const LinearMap2 back = inverse(inv);
  std::optional<double> radius;
  if (inner.declared_radius()) radius = operator_norm(inv) * *inner.declared_radius();
  return OperatorHandle(
      "conj(" + inner.name() + "," + to_string(t) + ")",
      [inner, t, inv](const Grid& f) { return resample_affine(inner(resample_affine(f, t)), inv); },
      [inner, t, back](const Grid& f, LatticePoint p) {
        const Grid tf = resample_affine(f, t);
        return inner.at_lattice(tf, back.a * p.x + back.b * p.y, back.c * p.x + back.d * p.y);
      },
      radius);
}

double generator_eval(const OperatorHandle& op, const Grid& f) {
  if (const auto r = op.declared_radius(); r && *r > f.geometry().covered_extent()) {
    std::ostringstream os;
    os << op.name() << ": receptive radius " << *r << " exceeds the domain half-width "
       << f.geometry().covered_extent();
    throw DomainFitError(os.str(), *r);
  }
  return op.at(f, {0, 0});
}

OperatorHandle operator_from_generator(Generator mu, std::string name) {
  auto g = std::make_shared<const Generator>(std::move(mu));
  return OperatorHandle(
      std::move(name),
      [g](const Grid& f) {
        Grid out(f.geometry());
        const int k = f.half_count();
        for (int y = -k; y <= k; ++y) {
          for (int x = -k; x <= k; ++x) out.at(x, y) = (*g)(translate(f, LatticePoint{-x, -y}));
        }
        return out;
      },
      [g](const Grid& f, LatticePoint p) { return (*g)(translate(f, LatticePoint{-p.x, -p.y})); });
}

Generator generator_of(const OperatorHandle& op) {
  return [op](const Grid& f) { return generator_eval(op, f); };
}

SemilocalEstimate estimate_semilocal_radius(const OperatorHandle& op,
                                            const std::vector<Grid>& probes,
                                            const std::vector<double>& radii,
                                            const SemilocalOptions& options) {
  if (probes.empty()) throw PreconditionError("semi-locality probing needs a non-empty corpus");
  if (radii.empty()) throw PreconditionError("semi-locality probing needs radii");
  if (options.perturbations < 1) throw PreconditionError("need at least one perturbation");
  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (!(radii[i] >= 0.0) || (i > 0 && !(radii[i] > radii[i - 1]))) {
      throw PreconditionError("radii must be non-negative and strictly ascending");
    }
  }
  for (const Grid& f : probes) {
    if (radii.back() >= f.geometry().covered_extent()) {
      throw DomainFitError("largest probe radius leaves no room outside the ball",
                           radii.back() + 2.0 * f.spacing());
    }
  }

  SemilocalEstimate est;
  est.radii = radii;
  est.max_deviation.assign(radii.size(), 0.0);
  est.seed = options.seed;
  est.perturbations = options.perturbations;

  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (const Grid& f : probes) {
    const double base = op.at(f, {0, 0});
    const double amp = options.amplitude * (max_abs(f) > 0.0 ? max_abs(f) : 1.0);
    const int k = f.half_count();
    const double h = f.spacing();
    for (int trial = 0; trial < options.perturbations; ++trial) {
      Grid noise(f.geometry());
      for (double& v : noise.values()) v = amp * unit(rng);
      for (std::size_t ri = 0; ri < radii.size(); ++ri) {
        const double lim = (radii[ri] / h) * (radii[ri] / h) * (1.0 + 1e-12);
        Grid g = f;
        for (int y = -k; y <= k; ++y) {
          for (int x = -k; x <= k; ++x) {
            if (static_cast<double>(x) * x + static_cast<double>(y) * y > lim) {
              g.at(x, y) += noise.at(x, y);
            }
          }
        }
        const double dev = std::abs(op.at(g, {0, 0}) - base);
        est.max_deviation[ri] = std::max(est.max_deviation[ri], dev);
      }
    }
  }
  // Smallest radius from which every larger tested radius also passes.
  for (std::size_t ri = radii.size(); ri-- > 0;) {
    if (est.max_deviation[ri] > options.tol) break;
    est.radius = radii[ri];
  }
  return est;
}

std::optional<NonconstantCertificate> is_nonconstant(const OperatorHandle& op,
                                                     const std::vector<Grid>& corpus,
                                                     double tol) {
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const double mu_zero = op.at(Grid(corpus[i].geometry()), {0, 0});
    const double mu_f = op.at(corpus[i], {0, 0});
    const double sep = std::abs(mu_f - mu_zero);
    if (sep > tol) return NonconstantCertificate{i, mu_f, mu_zero, sep};
  }
  return std::nullopt;
}

std::vector<ContractionStep> contraction_sequence(const Grid& f, const LinearMap2& t,
                                                  double chi_radius, int n_max,
                                                  const OperatorHandle* op) {
  if (n_max < 0) throw PreconditionError("n_max must be >= 0");
  const TransformClass cls = classify(t);
  if (cls.kind != TransformKind::identity) {
    const Eigenvalues ev = eigenvalues(t);
    if (!(std::abs(ev.first) > 1.0 + 1e-9)) {
      throw ClassificationError("transform " + to_string(t) +
                                " has no expanding eigenvalue; pass its inverse instead");
    }
  }
  if (!(chi_radius > 0.0) || chi_radius > f.geometry().covered_extent() * (1.0 + 1e-12)) {
    throw DomainFitError("cut-off radius must be positive and inside the domain", chi_radius);
  }
  const Grid chi_f = restrict_to_ball(f, chi_radius);
  std::vector<ContractionStep> out;
  out.reserve(static_cast<std::size_t>(n_max) + 1);
  for (int n = 0; n <= n_max; ++n) {
    Grid fn = restrict_to_ball(resample_affine(chi_f, iterate(t, n)), chi_radius);
    ContractionStep step{n, fn, support_estimate(fn, 0.0).measure, std::nullopt};
    if (op) step.mu = generator_eval(*op, fn);
    out.push_back(std::move(step));
  }
  return out;
}

}  // namespace equiaudit
