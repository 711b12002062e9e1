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

#include "equiaudit/audit.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>
#include <numeric>
#include <sstream>

#include "equiaudit/errors.hpp"
#include "equiaudit/parallel.hpp"

namespace equiaudit {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double linf(Vec2 v) { return std::max(std::abs(v.x), std::abs(v.y)); }

nlohmann::json num(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

nlohmann::json matrix_json(const LinearMap2& t) { return {t.a, t.b, t.c, t.d}; }

nlohmann::json curve_json(const ResidualCurve& c) {
  return {{"spacings", c.spacings},
          {"residuals", c.residuals},
          {"fitted_rate", num(c.fitted_rate)},
          {"exact", c.exact}};
}

double support_radius_of(const Grid& f) { return support_estimate(f, 0.0).radius; }

std::string slug(const std::string& spec) {
  std::string out;
  for (char ch : spec) {
    if (std::isalnum(static_cast<unsigned char>(ch)) || ch == '.' || ch == '-') {
      out.push_back(ch);
    } else {
      out.push_back('_');
    }
  }
  return out;
}

}  // namespace

double tolerance_at(double spacing) { return 5.0 * spacing; }
double floor_at(double spacing) { return 10.0 * spacing; }

ResidualCurve fit_residual_curve(std::vector<double> spacings, std::vector<double> residuals,
                                 double exact_threshold) {
  if (spacings.size() != residuals.size() || spacings.empty()) {
    throw PreconditionError("residual curve needs matching, non-empty spacings and residuals");
  }
  std::vector<std::size_t> order(spacings.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return spacings[a] > spacings[b]; });
  ResidualCurve c;
  for (std::size_t i : order) {
    c.spacings.push_back(spacings[i]);
    c.residuals.push_back(residuals[i]);
  }
  c.exact = std::all_of(c.residuals.begin(), c.residuals.end(),
                        [&](double r) { return r <= exact_threshold; });
  if (c.exact) {
    c.fitted_rate = kInf;
    return c;
  }
  std::vector<double> lx;
  std::vector<double> ly;
  for (std::size_t i = 0; i < c.spacings.size(); ++i) {
    if (c.residuals[i] > exact_threshold) {
      lx.push_back(std::log(c.spacings[i]));
      ly.push_back(std::log(c.residuals[i]));
    }
  }
  if (lx.size() < 2) {
    // Residual fell to the exactness threshold at the finer spacings.
    c.fitted_rate = c.residuals.back() <= exact_threshold ? kInf : 0.0;
    return c;
  }
  const double n = static_cast<double>(lx.size());
  const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / n;
  const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / n;
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  c.fitted_rate = sxx > 0.0 ? sxy / sxx : 0.0;
  return c;
}

std::function<bool(int, int)> trusted_mask(const GridGeometry& geometry, const LinearMap2& t_g,
                                           double margin) {
  const LinearMap2 inv = inverse(t_g);
  const double h = geometry.spacing();
  const double lim = (geometry.covered_extent() - margin - h) / h;
  const double lim_src = lim - 1.0;
  return [inv, lim, lim_src](int x, int y) {
    if (std::max(std::abs(x), std::abs(y)) > lim) return false;
    const double sx = inv.a * x + inv.b * y;
    const double sy = inv.c * x + inv.d * y;
    return std::max(std::abs(sx), std::abs(sy)) <= lim_src;
  };
}

AlignmentResult alignment_from_outputs(const Grid& lambda_th_f, const Grid& lambda_f,
                                       const Grid& lambda_zero, const LinearMap2& t_g,
                                       Norm norm, double margin) {
  const auto mask = trusted_mask(lambda_f.geometry(), t_g, margin);
  const Grid warped = resample_affine(lambda_th_f, t_g);
  AlignmentResult r;
  r.residual = distance_masked(warped, lambda_f, norm, mask);
  r.scale = distance_masked(lambda_f, lambda_zero, norm, mask);
  r.relative = r.scale > 0.0 ? r.residual / r.scale : 0.0;
  const int k = lambda_f.half_count();
  for (int y = -k; y <= k; ++y) {
    for (int x = -k; x <= k; ++x) r.trusted_samples += mask(x, y) ? 1 : 0;
  }
  return r;
}

AlignmentResult alignment_residual(const OperatorHandle& op, const LinearMap2& t_h,
                                   const LinearMap2& t_g, const Grid& f, Norm norm,
                                   std::optional<double> margin) {
  const double m = margin.value_or(op.declared_radius().value_or(0.0));
  const double need = std::max(1.0, operator_norm(t_h)) * support_radius_of(f) + m + f.spacing();
  if (need > f.geometry().covered_extent()) {
    std::ostringstream os;
    os << "warped support plus receptive margin needs half-width " << need << ", domain has "
       << f.geometry().covered_extent();
    throw DomainFitError(os.str(), need);
  }
  const Grid lhs = op(resample_affine(f, t_h));
  const Grid rhs = op(f);
  const Grid zero = op(Grid(f.geometry()));
  return alignment_from_outputs(lhs, rhs, zero, t_g, norm, m);
}

ResidualCurve naturality_check(const FilterSource& lambda, const LinearMap2& t,
                               const AnalyticField& f, const std::vector<double>& spacings,
                               double extent) {
  if (spacings.empty()) throw PreconditionError("naturality check needs spacings");
  const LinearMap2 inv = inverse(t);
  std::vector<double> residuals;
  for (double h : spacings) {
    const GridGeometry geometry(extent, h);
    const Filter lam = lambda(h);
    const Filter warped = transform_filter(lam, t);
    const double rf = f.support_radius;
    const double need = std::max(std::max(1.0, operator_norm(t)) * rf + lam.support_radius(),
                                 rf + warped.support_radius()) +
                        h;
    if (need > geometry.covered_extent()) {
      throw DomainFitError("naturality check does not fit the domain", need);
    }
    const Grid fh = render(f, geometry);
    const Grid lhs = resample_affine(convolve(resample_affine(fh, t), lam), inv);
    const Grid rhs = convolve(fh, warped);
    const double scale = norm(rhs, Norm::L1);
    const double d = distance(lhs, rhs, Norm::L1);
    residuals.push_back(scale > 0.0 ? d / scale : d);
  }
  return fit_residual_curve(spacings, residuals);
}

double commutation_check(const LinearMap2& t, Vec2 delta, const Grid& f) {
  const Grid a = resample_affine(translate(f, delta), t);
  const Grid b = translate(resample_affine(f, t), t * delta);
  return distance(a, b, Norm::sup);
}

FixedPointResult filter_fixed_point_residual(const Filter& lambda, const LinearMap2& t) {
  FixedPointResult r;
  const double l1 = lambda.l1_norm();
  if (l1 == 0.0) {
    r.degenerate = true;
    return r;
  }
  const Filter warped = transform_filter(lambda, t);
  const double h = lambda.spacing();
  const GridGeometry common(std::max(lambda.grid().geometry().covered_extent(),
                                     warped.grid().geometry().covered_extent()),
                            h);
  const Grid a = resample_to(lambda.grid(), common);
  const Grid b = resample_to(warped.grid(), common);
  r.residual = distance(a, b, Norm::L1) / l1;
  r.sup_ratio = max_abs(warped.grid()) / max_abs(lambda.grid());
  return r;
}

CounterexampleCertificate norot_counterexample(const OperatorHandle& op1,
                                               const OperatorHandle& op2, const LinearMap2& t,
                                               const NorotOptions& options) {
  if (max_abs_difference(t, LinearMap2::identity()) <= 1e-9) {
    throw PreconditionError("the identity transform admits no counterexample");
  }
  if (!op1.declared_radius() || !op2.declared_radius()) {
    throw PreconditionError("counterexample operators must declare a receptive radius");
  }
  const double h = options.spacing;
  const double r1 = *op1.declared_radius();
  const double r2 = *op2.declared_radius();
  const double rf = options.bump_radius > 0.0 ? options.bump_radius : std::max(r1, 4.0 * h);
  const LinearMap2 inv = inverse(t);
  const LinearMap2 m = inv - LinearMap2::identity();

  CounterexampleCertificate cert;
  cert.spacing = h;
  cert.bump_radius = rf;

  // Bump center: the candidate with the largest response at the origin.
  {
    std::vector<Vec2> centers = {{0.0, 0.0}};
    for (double frac : {0.5, 1.0}) {
      for (int j = 0; j < 8; ++j) {
        const double a = j * std::numbers::pi / 4.0;
        const double rr = frac * std::max(r1, h);
        centers.push_back({std::round(rr * std::cos(a) / h) * h, std::round(rr * std::sin(a) / h) * h});
      }
    }
    const GridGeometry local(std::max(r1, h) + rf + r1 + 2.0 * h, h);
    const Grid zero(local);
    const double mu0 = op1.at(zero, {0, 0});
    double best = -1.0;
    for (Vec2 c : centers) {
      const double v = std::abs(op1.at(render(bump_field(c, rf), local), {0, 0}) - mu0);
      if (v > best) {
        best = v;
        cert.bump_center = c;
      }
    }
  }

  // Direction maximizing |(T^-1 - I) v|, preferring the axes on ties.
  const double sigma = operator_norm(m);
  Vec2 dir{1.0, 0.0};
  if ((m * Vec2{1.0, 0.0}).norm() >= sigma * (1.0 - 1e-9)) {
    dir = {1.0, 0.0};
  } else if ((m * Vec2{0.0, 1.0}).norm() >= sigma * (1.0 - 1e-9)) {
    dir = {0.0, 1.0};
  } else {
    // Top eigenvector of M^T M.
    const LinearMap2 mtm = LinearMap2{m.a, m.c, m.b, m.d} * m;
    const double lam = sigma * sigma;
    Vec2 v{mtm.b, lam - mtm.a};
    if (v.norm() < 1e-12) v = {lam - mtm.d, mtm.c};
    dir = v * (1.0 / v.norm());
  }
  cert.required_displacement = cert.bump_center.norm() + rf + r2 + std::max(1.0, 2.0 * h);
  double len = cert.required_displacement / (m * dir).norm();
  for (;;) {
    cert.p_lattice = {static_cast<int>(std::lround(dir.x * len / h)),
                      static_cast<int>(std::lround(dir.y * len / h))};
    cert.p = {cert.p_lattice.x * h, cert.p_lattice.y * h};
    cert.displacement = (m * cert.p).norm();
    if (cert.displacement > cert.required_displacement) break;
    len += h;
  }

  const Vec2 tp = inv * cert.p;
  const double need =
      std::max({linf(cert.p) + linf(cert.bump_center) + rf, linf(cert.p) + r1, linf(tp) + r2 + h}) +
      2.0 * h;
  if (options.extent > 0.0 && options.extent < need) {
    std::ostringstream os;
    os << "counterexample needs half-width " << need << ", got " << options.extent;
    throw DomainFitError(os.str(), need);
  }
  if (options.extent <= 0.0 && need > options.max_extent) {
    std::ostringstream os;
    os << "counterexample needs half-width " << need << ", above the limit "
       << options.max_extent;
    throw DomainFitError(os.str(), need);
  }
  cert.extent = options.extent > 0.0 ? options.extent : need;
  const GridGeometry geometry(cert.extent, h);

  const Grid f = render(bump_field(cert.bump_center, rf), geometry);
  const Grid moved = translate(f, LatticePoint{-cert.p_lattice.x, -cert.p_lattice.y});
  const Grid zero(geometry);
  const LatticePoint mp{-cert.p_lattice.x, -cert.p_lattice.y};
  cert.lhs = op1.at(moved, mp) - op1.at(zero, mp);
  const double qx = -(inv.a * cert.p_lattice.x + inv.b * cert.p_lattice.y);
  const double qy = -(inv.c * cert.p_lattice.x + inv.d * cert.p_lattice.y);
  cert.rhs = op2.at_lattice(moved, qx, qy) - op2.at_lattice(zero, qx, qy);
  cert.separation = std::abs(cert.lhs - cert.rhs);
  cert.scale = options.scale > 0.0 ? options.scale : std::abs(cert.lhs);
  cert.tol = options.relative_tol * cert.scale;
  cert.floor = options.floor_factor * cert.tol;
  cert.valid = std::abs(cert.lhs) > cert.floor && std::abs(cert.rhs) <= cert.tol;
  return cert;
}

CounterexampleCertificate norot_counterexample(const Filter& lambda1, const Filter& lambda2,
                                               const LinearMap2& t, NorotOptions options) {
  options.spacing = lambda1.spacing();
  if (options.scale <= 0.0) options.scale = lambda1.l1_norm();
  return norot_counterexample(convolution_operator(lambda1), convolution_operator(lambda2), t,
                              options);
}

MollifierResult mollifier_recover_filter(const Filter& lambda, double sigma0, int n_steps) {
  if (!(sigma0 > 0.0) || n_steps < 0) {
    throw PreconditionError("mollifier study needs sigma0 > 0 and n_steps >= 0");
  }
  const double h = lambda.spacing();
  const GridGeometry geometry(lambda.support_radius() + 4.0 * sigma0 + 2.0 * h, h);
  const Grid target = resample_to(lambda.grid(), geometry);
  MollifierResult out;
  out.lambda_l1 = lambda.l1_norm();
  double prev = kInf;
  for (int n = 0; n <= n_steps; ++n) {
    const double sigma = sigma0 / std::ldexp(1.0, n);
    const double cut = 4.0 * sigma;
    const Filter raw = make_filter(
        [sigma](Vec2 x) { return std::exp(-0.5 * (x.x * x.x + x.y * x.y) / (sigma * sigma)); },
        cut, h);
    Grid g = raw.grid();
    g *= 1.0 / integral(g);
    const Filter mollifier(std::move(g), cut);
    // conv_lambda f_n = f_n * lambda; convolving lambda by the small mollifier is cheaper.
    const Grid smoothed = convolve(target, mollifier);
    MollifierStep step;
    step.n = n;
    step.sigma = sigma;
    step.error = distance(smoothed, target, Norm::L1);
    step.relative = out.lambda_l1 > 0.0 ? step.error / out.lambda_l1 : step.error;
    if (sigma <= lambda.support_radius() / 4.0) {
      if (step.error > prev * (1.0 + 1e-12)) out.monotone_tail = false;
      prev = step.error;
    }
    out.steps.push_back(step);
  }
  out.resolution_warning = out.steps.back().sigma < 2.0 * h;
  return out;
}

InvarianceResidual generator_invariance_residual(const OperatorHandle& op, const LinearMap2& t,
                                                 const std::vector<Grid>& corpus) {
  InvarianceResidual r;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const double mu_f = generator_eval(op, corpus[i]);
    const double mu_tf = generator_eval(op, resample_affine(corpus[i], t));
    const double d = std::abs(mu_tf - mu_f);
    r.per_item.push_back(d);
    if (i == 0 || d > r.max_residual) {
      r.max_residual = d;
      r.argmax = i;
      r.mu_f = mu_f;
      r.mu_tf = mu_tf;
    }
  }
  return r;
}

// ------------------------------------------------------------------ full audit

namespace {

struct Level {
  double spacing = 0.0;
  GridGeometry geometry{1.0, 1.0};
  std::shared_ptr<const CnnModel> model;
  std::unique_ptr<OperatorHandle> op;
  std::vector<Grid> corpus;
  std::vector<Grid> outputs;  // Lambda f per corpus item
  Grid zero_output{GridGeometry(1.0, 1.0)};
};

struct Outcome {
  nlohmann::json summary;
  std::vector<nlohmann::json> checks;
  std::vector<CurveExport> curves;
  std::vector<ImageExport> images;
  bool match = true;
};

nlohmann::json check(std::string name, std::string property, nlohmann::json params,
                     nlohmann::json residual, std::string verdict,
                     nlohmann::json curve = nullptr) {
  return {{"name", std::move(name)},
          {"paper_ref", std::move(property)},
          {"params", std::move(params)},
          {"residual", std::move(residual)},
          {"verdict", std::move(verdict)},
          {"spacing_curve", std::move(curve)}};
}

CurveExport curve_export(const std::string& name, const ResidualCurve& c) {
  CurveExport e{name, {"spacing", "residual"}, {}};
  for (std::size_t i = 0; i < c.spacings.size(); ++i) e.rows.push_back({c.spacings[i], c.residuals[i]});
  return e;
}

const std::vector<std::pair<std::string, LinearMap2>>& aligner_candidates() {
  static const std::vector<std::pair<std::string, LinearMap2>> c = {
      {"rot:45", LinearMap2::rotation_degrees(45.0)},
      {"scale:1.25", LinearMap2::scaling(1.25, 1.25)},
      {"shear:0.5", LinearMap2::shear(0.5)},
  };
  return c;
}

Outcome audit_transform(const TransformSpec& ts, std::size_t index, const std::vector<Level>& levels,
                        const std::vector<AnalyticField>& fields, double rho, double r_rec,
                        const AuditConfig& cfg) {
  Outcome out;
  const LinearMap2& t = ts.map;
  const std::string tag = ts.spec;
  const std::string base = slug(ts.spec);
  const Level& fine = levels.back();
  const double hf = fine.spacing;
  const TransformClass cls = classify(t, cfg.classify);
  const bool admits =
      alignment_admits_invariance(t, cfg.classify) == InvarianceVerdict::yes_with_invariant_features;
  const bool is_identity = cls.kind == TransformKind::identity;
  LinearMap2 t_inv = inverse(t);

  nlohmann::json cls_params = {{"matrix", matrix_json(t)}, {"admits_invariance", admits}};
  if (cls.canonical_angle) cls_params["canonical_angle"] = *cls.canonical_angle;
  if (cls.conjugator) cls_params["conjugator"] = matrix_json(*cls.conjugator);
  out.checks.push_back(check("classify[" + tag + "]",
                             "Jordan-form classification of the linear part", cls_params, nullptr,
                             cls.label()));

  // Alignment with T_g = T^-1 at every spacing; keep the fine outputs of T f.
  std::vector<double> spacings;
  std::vector<double> worst;
  std::vector<Grid> fine_th_outputs;
  std::size_t fine_argmax = 0;
  for (std::size_t li = 0; li < levels.size(); ++li) {
    const Level& lv = levels[li];
    double w = 0.0;
    std::size_t arg = 0;
    for (std::size_t i = 0; i < lv.corpus.size(); ++i) {
      Grid th = (*lv.op)(resample_affine(lv.corpus[i], t));
      const AlignmentResult a =
          alignment_from_outputs(th, lv.outputs[i], lv.zero_output, t_inv, Norm::L1, r_rec);
      if (a.relative > w) {
        w = a.relative;
        arg = i;
      }
      if (li + 1 == levels.size()) fine_th_outputs.push_back(std::move(th));
    }
    spacings.push_back(lv.spacing);
    worst.push_back(w);
    if (li + 1 == levels.size()) fine_argmax = arg;
  }
  const ResidualCurve align = fit_residual_curve(spacings, worst);
  std::string verdict;
  const double fine_res = align.finest();
  const double prev_res = align.residuals.size() > 1 ? align.residuals[align.residuals.size() - 2]
                                                      : fine_res;
  if (align.exact || fine_res <= tolerance_at(hf)) {
    verdict = "aligned";
  } else if (fine_res >= floor_at(hf) && fine_res >= 0.5 * prev_res) {
    verdict = "misaligned";
  } else {
    verdict = "inconclusive";
  }

  // Filters invariant under T (up to |det T|)?
  double fp_worst = 0.0;
  double fp_sup_ratio = 0.0;
  for (const ConvLayer& layer : fine.model->layers()) {
    for (const auto& row : layer.kernels) {
      for (const Filter& k : row) {
        const FixedPointResult r = filter_fixed_point_residual(k, t);
        if (r.residual >= fp_worst) {
          fp_worst = r.residual;
          fp_sup_ratio = r.sup_ratio;
        }
      }
    }
  }
  const bool filters_pass = fp_worst <= tolerance_at(hf);
  out.checks.push_back(check("fixed_point[" + tag + "]",
                             "filter fixed point lambda = |det T| T^-1 lambda",
                             {{"spacing", hf}, {"tolerance", tolerance_at(hf)},
                              {"sup_ratio", num(fp_sup_ratio)}},
                             fp_worst, filters_pass ? "pass" : "fail"));

  const bool constant = !is_nonconstant(*fine.op, fine.corpus).has_value();
  const bool expect_aligned = constant || (admits && filters_pass);
  const std::string expected = expect_aligned ? "aligned" : "misaligned";
  out.match = verdict == expected;
  out.checks.push_back(check("alignment[" + tag + "]",
                             "feature alignment T_g Lambda T_h f = Lambda f with T_g = T_h^-1",
                             {{"aligner", to_string(t_inv)},
                              {"norm", "L1, relative to ||Lambda f - Lambda 0||"},
                              {"masked_region", "samples whose receptive field and warp source "
                                                "stay inside the domain"},
                              {"tolerance", tolerance_at(hf)},
                              {"floor", floor_at(hf)},
                              {"expected", expected},
                              {"argmax_item", fields[fine_argmax].name}},
                             fine_res, verdict, curve_json(align)));
  out.curves.push_back(curve_export(base + "_alignment", align));
  {
    const Grid warped = resample_affine(fine_th_outputs[fine_argmax], t_inv);
    const Grid& ref = fine.outputs[fine_argmax];
    out.images.push_back({base + "_alignment", {ref, warped, warped - ref}});
  }

  // Generator invariance |mu(T f) - mu(f)| at the finest spacing.
  {
    double w = 0.0;
    std::size_t arg = 0;
    for (std::size_t i = 0; i < fine.corpus.size(); ++i) {
      const double d = std::abs(fine_th_outputs[i].at(0, 0) - fine.outputs[i].at(0, 0));
      if (d > w) {
        w = d;
        arg = i;
      }
    }
    out.checks.push_back(check("generator_invariance[" + tag + "]",
                               "generator invariance mu(T_h f) = mu(f)",
                               {{"spacing", hf}, {"argmax_item", fields[arg].name}}, w,
                               expect_aligned ? "expected_small" : "expected_violation"));
  }

  // Naturality of the first kernel under T.
  {
    std::vector<double> sp;
    for (const Level& lv : levels) sp.push_back(lv.spacing);
    std::vector<Filter> kernels;
    for (const Level& lv : levels) kernels.push_back(lv.model->layers().front().kernels[0][0]);
    auto source = [&](double h) {
      for (std::size_t i = 0; i < sp.size(); ++i) {
        if (sp[i] == h) return kernels[i];
      }
      return resample_filter(kernels.back(), h);
    };
    const AnalyticField& f0 = fields.front();
    const double need = std::max(1.0, operator_norm(t)) * f0.support_radius +
                        operator_norm(t_inv) * kernels.back().support_radius() + 4.0 * hf;
    const double ext = std::max(cfg.extent, need);
    const ResidualCurve nat = naturality_check(source, t, f0, sp, ext);
    const bool ok = nat.exact || (nat.fitted_rate >= 0.9 && nat.finest() <= tolerance_at(hf));
    out.checks.push_back(check("naturality[" + tag + "]",
                               "naturality T^-1 conv_lambda T = conv_{|det T| T^-1 lambda}",
                               {{"item", f0.name}, {"extent", ext}, {"min_rate", 0.9}},
                               nat.finest(), ok ? "pass" : "fail", curve_json(nat)));
    out.curves.push_back(curve_export(base + "_naturality", nat));
  }

  // Commutation with a one-sample translation.
  {
    const Vec2 delta{hf, 0.0};
    const double r = commutation_check(t, delta, fine.corpus.front());
    const double scale = max_abs(fine.corpus.front());
    const double tol = tolerance_at(hf) * scale;
    out.checks.push_back(check("commutation[" + tag + "]", "T D_delta = D_{T delta} T",
                               {{"delta", {delta.x, delta.y}}, {"tolerance", tol}}, r,
                               r <= tol ? "pass" : "fail"));
  }

  // Necessity of T_g = T^-1 over the candidate aligners.
  if (admits) {
    double min_gap = kInf;
    nlohmann::json per = nlohmann::json::object();
    for (const auto& [name, s] : aligner_candidates()) {
      const LinearMap2 tg = s * t_inv;
      const double margin = r_rec;
      double w = 0.0;
      for (std::size_t i = 0; i < fine.corpus.size(); ++i) {
        const AlignmentResult a = alignment_from_outputs(fine_th_outputs[i], fine.outputs[i],
                                                         fine.zero_output, tg, Norm::L1, margin);
        w = std::max(w, a.relative);
      }
      per[name] = w;
      min_gap = std::min(min_gap, w - fine_res);
    }
    out.checks.push_back(check("aligner_necessity[" + tag + "]",
                               "only T_g = T_h^-1 aligns the feature maps",
                               {{"candidates", per}, {"identity_residual", fine_res},
                               {"floor", floor_at(hf)},
                               {"scope", "finite candidate set {S T_h^-1} and the corpus only"}},
                               min_gap, min_gap >= floor_at(hf) ? "pass" : "fail"));
  }

  // Counterexample to aligning with any T_g but T^-1 (multi-layer form).
  if (!is_identity) {
    const Level& coarse = levels.front();
    NorotOptions opts;
    opts.spacing = coarse.spacing;
    opts.max_extent = std::max(64.0 * coarse.spacing * 100.0, 8.0 * cfg.extent);
    try {
      const CounterexampleCertificate c = norot_counterexample(*coarse.op, *coarse.op, t, opts);
      out.checks.push_back(check(
          "norot[" + tag + "]", "displaced bump separates T_g != T_h^-1",
          {{"bump_center", {c.bump_center.x, c.bump_center.y}},
           {"bump_radius", c.bump_radius},
           {"p", {c.p.x, c.p.y}},
           {"displacement", c.displacement},
           {"required_displacement", c.required_displacement},
           {"extent", c.extent},
           {"spacing", c.spacing},
           {"lhs", c.lhs},
           {"rhs", c.rhs},
           {"tol", c.tol},
           {"floor", c.floor}},
          c.separation, c.valid ? "valid" : "invalid"));
    } catch (const DomainFitError& e) {
      out.checks.push_back(check("norot[" + tag + "]", "displaced bump separates T_g != T_h^-1",
                                 {{"reason", e.what()}, {"required_extent", e.required_extent()}},
                                 nullptr, "skipped"));
    }
  }

  // Contraction sequence for maps with an expanding direction.
  if (!is_identity && std::abs(eigenvalues(t).first) > 1.0 + 1e-9) {
    // The item whose support stays farthest from the origin.
    std::size_t item = 0;
    double best_gap = -1.0;
    for (std::size_t i = 0; i < fine.corpus.size(); ++i) {
      const Grid& g = fine.corpus[i];
      const int k = g.half_count();
      double gap = kInf;
      for (int y = -k; y <= k; ++y) {
        for (int x = -k; x <= k; ++x) {
          if (g.at(x, y) != 0.0) gap = std::min(gap, std::hypot(x, y) * g.spacing());
        }
      }
      if (gap > best_gap) {
        best_gap = gap;
        item = i;
      }
    }
    const auto seq =
        contraction_sequence(fine.corpus[item], t, rho, cfg.contraction_steps, fine.op.get());
    const double mu0 = fine.zero_output.at(0, 0);
    CurveExport trace{base + "_contraction", {"n", "support_measure", "mu_value"}, {}};
    nlohmann::json measures = nlohmann::json::array();
    nlohmann::json mus = nlohmann::json::array();
    for (const auto& s : seq) {
      trace.rows.push_back({static_cast<double>(s.n), s.support_measure, s.mu.value_or(0.0)});
      measures.push_back(s.support_measure);
      mus.push_back(s.mu.value_or(0.0));
    }
    const auto& last = seq.back();
    std::string v;
    if (last.support_measure == 0.0 && last.mu == mu0) {
      v = "vanishes";
    } else if (last.support_measure < seq.front().support_measure) {
      v = "shrinks";
    } else {
      v = "persists";
    }
    out.checks.push_back(check("contraction[" + tag + "]",
                               "contraction sequence f_n = chi T^n (chi f) forces mu(f_n) -> mu(0)",
                               {{"chi_radius", rho}, {"item", fields[item].name},
                                {"support_measures", measures}, {"mu_values", mus},
                                {"mu_zero", mu0},
                                {"scope", "compactly supported bounded images only"}},
                               std::abs(last.mu.value_or(0.0) - mu0), v));
    out.curves.push_back(std::move(trace));
  }

  out.summary = {{"index", index},
                 {"spec", ts.spec},
                 {"matrix", matrix_json(t)},
                 {"class", cls.label()},
                 {"admits_invariance", admits},
                 {"filters_invariant", filters_pass},
                 {"constant_operator", constant},
                 {"verdict", verdict},
                 {"expected", expected},
                 {"match", out.match}};
  return out;
}

}  // namespace

AuditBundle full_audit(const ModelSource& model, const std::vector<TransformSpec>& transforms,
                       const AuditConfig& cfg) {
  if (!(cfg.extent > 0.0) || !(cfg.spacing > 0.0)) {
    throw PreconditionError("audit geometry needs extent > 0 and spacing > 0");
  }
  if (cfg.refinements < 1) throw PreconditionError("audit needs refinements >= 1");
  if (cfg.jobs < 1) throw PreconditionError("jobs must be >= 1");

  AuditBundle bundle;
  nlohmann::json& report = bundle.report;
  report["tool"] = "equiaudit";
  report["seed"] = cfg.seed;
  report["model"] = model.description;
  report["scope"] =
      "Aligners are tested against T_h^-1 composed with a finite candidate set and over the "
      "corpus only; contraction checks cover compactly supported bounded images.";

  // Spacings coarse to fine.
  std::vector<Level> levels(static_cast<std::size_t>(cfg.refinements) + 1);
  for (std::size_t j = 0; j < levels.size(); ++j) {
    levels[j].spacing = cfg.spacing * std::ldexp(1.0, cfg.refinements - static_cast<int>(j));
    levels[j].geometry = GridGeometry(cfg.extent, levels[j].spacing);
  }
  parallel_for(levels.size(), cfg.jobs, [&](std::size_t j) {
    levels[j].model = std::make_shared<const CnnModel>(model.at(levels[j].spacing));
  });
  const CnnModel& fine_model = *levels.back().model;
  if (fine_model.in_channels() != 1) throw PreconditionError("audited models take one channel");
  const std::size_t depth = fine_model.depth();
  const double r_rec = receptive_radius(fine_model, depth);
  for (Level& lv : levels) lv.op = std::make_unique<OperatorHandle>(cnn_operator(lv.model, depth, 0));

  const double hc = levels.front().spacing;
  double covered = cfg.extent;
  for (const Level& lv : levels) covered = std::min(covered, lv.geometry.covered_extent());
  double max_norm = 1.0;
  for (const TransformSpec& ts : transforms) max_norm = std::max(max_norm, operator_norm(ts.map));
  const double rho_fit = (covered - r_rec - 2.0 * hc) / max_norm;
  CorpusRecipe recipe = cfg.corpus;
  if (recipe.radius > 0.0) {
    if (recipe.radius > rho_fit) {
      const double need = recipe.radius * max_norm + r_rec + 2.0 * hc;
      std::ostringstream os;
      os << "corpus radius " << recipe.radius << " does not fit: warped images plus receptive "
         << "radius need half-width " << need;
      throw DomainFitError(os.str(), need);
    }
  } else {
    if (!(rho_fit > 2.0 * hc)) {
      throw DomainFitError("domain too small for the receptive radius and transforms",
                           r_rec + max_norm * 4.0 * hc + 2.0 * hc);
    }
    recipe.radius = rho_fit;
  }
  const std::vector<AnalyticField> fields = build_corpus(recipe);
  if (fields.empty()) throw PreconditionError("the corpus is empty");

  for (Level& lv : levels) {
    lv.corpus = render_corpus(fields, lv.geometry);
    lv.outputs.resize(fields.size(), Grid(lv.geometry));
  }
  const std::size_t per = fields.size() + 1;
  parallel_for(levels.size() * per, cfg.jobs, [&](std::size_t task) {
    Level& lv = levels[task / per];
    const std::size_t i = task % per;
    if (i == fields.size()) {
      lv.zero_output = (*lv.op)(Grid(lv.geometry));
    } else {
      lv.outputs[i] = (*lv.op)(lv.corpus[i]);
    }
  });

  std::vector<double> spacing_list;
  for (const Level& lv : levels) spacing_list.push_back(lv.spacing);
  nlohmann::json item_names = nlohmann::json::array();
  for (const auto& f : fields) item_names.push_back(f.name);
  report["config"] = {{"extent", cfg.extent},
                      {"spacing", cfg.spacing},
                      {"refinements", cfg.refinements},
                      {"spacings", spacing_list},
                      {"corpus",
                       {{"radius", recipe.radius},
                        {"positions", recipe.positions},
                        {"radius_fractions", recipe.radius_fractions},
                        {"edge", recipe.edge},
                        {"glyphs", recipe.glyphs},
                        {"items", item_names}}},
                      {"semilocal_perturbations", cfg.semilocal_perturbations},
                      {"contraction_steps", cfg.contraction_steps},
                      {"classify", {{"tol", cfg.classify.tol}, {"n_max", cfg.classify.n_max}}}};
  report["model"]["receptive_radius"] = r_rec;

  nlohmann::json checks = nlohmann::json::array();

  // Model-level checks.
  {
    const Level& lv = levels.front();
    const double bound = r_rec;
    std::vector<double> radii;
    const double top = std::min(bound + 4.0 * hc, lv.geometry.covered_extent() - 2.0 * hc);
    for (double r = 0.5 * hc; r <= top + 1e-12; r += 0.5 * hc) radii.push_back(r);
    std::vector<Grid> probes(lv.corpus.begin(),
                             lv.corpus.begin() + std::min<std::ptrdiff_t>(2, lv.corpus.size()));
    SemilocalOptions so;
    so.perturbations = cfg.semilocal_perturbations;
    so.seed = cfg.seed;
    const SemilocalEstimate est = estimate_semilocal_radius(*lv.op, probes, radii, so);
    const bool ok = est.found() && est.radius <= bound + 2.0 * hc;
    checks.push_back(check("semilocal_radius", "semi-locality radius bounded by the receptive "
                                               "radius recursion",
                           {{"bound", bound}, {"spacing", hc}, {"seed", cfg.seed},
                            {"perturbations", so.perturbations}, {"radii", radii},
                            {"max_deviation", est.max_deviation}},
                           num(est.radius), ok ? "pass" : "fail"));
    const auto cert = is_nonconstant(*levels.back().op, levels.back().corpus);
    if (cert) {
      checks.push_back(check("nonconstant", "operator differs from its value on the zero image",
                             {{"item", fields[cert->index].name}, {"mu_f", cert->mu_f},
                              {"mu_zero", cert->mu_zero}},
                             cert->separation, "nonconstant"));
    } else {
      checks.push_back(check("nonconstant", "operator differs from its value on the zero image",
                             nlohmann::json::object(), 0.0, "constant"));
    }
  }

  std::vector<Outcome> outcomes(transforms.size());
  parallel_for(transforms.size(), cfg.jobs, [&](std::size_t i) {
    outcomes[i] = audit_transform(transforms[i], i, levels, fields, recipe.radius, r_rec, cfg);
  });

  nlohmann::json summaries = nlohmann::json::array();
  std::size_t mismatches = 0;
  for (Outcome& o : outcomes) {
    for (auto& c : o.checks) checks.push_back(std::move(c));
    summaries.push_back(o.summary);
    if (!o.match) ++mismatches;
    for (auto& c : o.curves) bundle.curves.push_back(std::move(c));
    for (auto& im : o.images) bundle.images.push_back(std::move(im));
  }
  bundle.all_match = mismatches == 0;
  report["transforms"] = std::move(summaries);
  report["checks"] = std::move(checks);
  report["summary"] = {{"transforms", transforms.size()},
                       {"mismatches", mismatches},
                       {"all_match", bundle.all_match}};
  return bundle;
}

}  // namespace equiaudit
