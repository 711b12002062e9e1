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


#include <algorithm>
#include <sstream>

#include "equiaudit/cli.hpp"
#include "equiaudit/io.hpp"

namespace equiaudit::cli {

namespace {

// Correlation template for a field: lambda(x) = f(-x), scaled to unit energy.
Filter matched_template(const AnalyticField& f, double spacing) {
  Filter raw = make_filter([&f](Vec2 x) { return f(-x); }, f.support_radius, spacing);
  Grid g = raw.grid();
  double energy = 0.0;
  for (double v : g.values()) energy += v * v;
  energy *= spacing * spacing;
  g *= 1.0 / energy;
  return Filter(std::move(g), f.support_radius);
}

double relative_l1(const Grid& a, const Grid& b) {
  const double s = norm(b, Norm::L1);
  return s > 0.0 ? distance(a, b, Norm::L1) / s : distance(a, b, Norm::L1);
}

double max_value(const Grid& g) {
  return *std::max_element(g.values().begin(), g.values().end());
}

}  // namespace

std::string DemoSummary::line() const {
  std::ostringstream os;
  os << name << ":";
  for (const auto& [key, value] : values) os << " " << key << "=" << value;
  os << " expected=" << (expected ? "yes" : "no");
  return os.str();
}

DemoSummary demo_wm_rotation(const std::filesystem::path& out_dir, double spacing) {
  const double rho = 0.4;
  const AnalyticField w = glyph_w(rho);
  const AnalyticField m = glyph_m(rho);
  const GridGeometry geometry(2.0 * rho + 4.0 * spacing, spacing);
  // Channel c responds to glyph c.
  const Filter lambda_w = matched_template(w, spacing);
  const Filter lambda_m = matched_template(m, spacing);
  const LinearMap2 half_turn = LinearMap2::rotation_degrees(180.0);
  const LinearMap2 back = inverse(half_turn);

  const Grid f = render(w, geometry);
  const Grid tf = resample_affine(f, half_turn);
  const Grid w_f = convolve(f, lambda_w);
  const Grid m_f = convolve(f, lambda_m);
  const Grid w_tf = resample_affine(convolve(tf, lambda_w), back);
  const Grid m_tf = resample_affine(convolve(tf, lambda_m), back);

  const double channelwise = std::max(relative_l1(w_tf, w_f), relative_l1(m_tf, m_f));
  const double swapped = std::max(relative_l1(w_tf, m_f), relative_l1(m_tf, w_f));

  std::filesystem::create_directories(out_dir);
  save_pgm_strip(out_dir / "wm_rotation_input.pgm", {f, tf});
  save_pgm_strip(out_dir / "wm_rotation_channel_w.pgm", {w_f, w_tf, w_tf - w_f});
  save_pgm_strip(out_dir / "wm_rotation_channel_m.pgm", {m_f, m_tf, m_tf - m_f});

  DemoSummary s;
  s.name = "wm-rotation";
  s.values = {{"spacing", spacing},
              {"channelwise_residual", channelwise},
              {"swapped_residual", swapped},
              {"floor", floor_at(spacing)},
              {"tol", tolerance_at(spacing)}};
  s.expected = channelwise > floor_at(spacing) && swapped <= tolerance_at(spacing);
  return s;
}

DemoSummary demo_scale_fov(const std::filesystem::path& out_dir, double spacing) {
  const double rho = 0.3;
  const AnalyticField w = glyph_w(rho);
  const Filter lambda = matched_template(w, spacing);
  const LinearMap2 enlarge = LinearMap2::scaling(2.0, 2.0);
  const GridGeometry geometry(3.0 * rho + 4.0 * spacing, spacing);

  const Grid f = render(w, geometry);
  const Grid tf = resample_affine(f, enlarge);
  const Grid r_f = convolve(f, lambda);
  const Grid r_tf = convolve(tf, lambda);
  const double peak = max_value(r_f);
  const double peak_scaled = max_value(r_tf);
  const double ratio = peak > 0.0 ? peak_scaled / peak : 0.0;

  std::filesystem::create_directories(out_dir);
  save_pgm_strip(out_dir / "scale_fov_input.pgm", {f, tf});
  save_pgm_strip(out_dir / "scale_fov_response.pgm", {r_f, r_tf, r_tf - r_f});

  DemoSummary s;
  s.name = "scale-fov";
  s.values = {{"spacing", spacing},
              {"peak_original", peak},
              {"peak_rescaled", peak_scaled},
              {"ratio", ratio}};
  s.expected = ratio < 0.8;
  return s;
}

}  // namespace equiaudit::cli
