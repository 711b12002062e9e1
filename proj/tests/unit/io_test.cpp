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

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "equiaudit/errors.hpp"
#include "equiaudit/io.hpp"

namespace equiaudit {
namespace {

namespace fs = std::filesystem;

Grid random_grid(double extent, double h, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 3.0);
  Grid g(GridGeometry(extent, h));
  for (double& v : g.values()) v = n(rng);
  return g;
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "equiaudit_io_test";
  fs::create_directories(dir);
  return dir / name;
}

TEST(GridText, RoundTripIsExact) {
  const Grid g = random_grid(0.3, 0.07, 1);
  std::stringstream s;
  write_grid_text(s, g);
  const Grid back = read_grid_text(s);
  EXPECT_TRUE(back.geometry() == g.geometry());
  EXPECT_EQ(distance(back, g, Norm::sup), 0.0);
}

TEST(GridText, TopRowFirst) {
  Grid g(GridGeometry(1.0, 1.0));
  g.at(0, 1) = 7.0;
  std::stringstream s;
  write_grid_text(s, g);
  std::string magic, e, h, n;
  double first[3];
  s >> magic >> e >> h >> n >> first[0] >> first[1] >> first[2];
  EXPECT_EQ(magic, "GRID2");
  EXPECT_EQ(n, "3");
  EXPECT_EQ(first[1], 7.0);
}

TEST(GridText, FileRoundTrip) {
  const Grid g = random_grid(0.5, 0.1, 2);
  const fs::path p = scratch("g.txt");
  save_grid_text(p, g);
  EXPECT_EQ(distance(load_grid_text(p), g, Norm::sup), 0.0);
}

TEST(GridText, Rejects) {
  for (const char* text : {"GRID3 1 1 3\n0 0 0 0 0 0 0 0 0", "GRID2 1 1 5\n0", "GRID2 1 1 3\n0 0 0",
                           "GRID2 1 1 3\n0 0 0 0 0 0 0 0 x", "GRID2 1 1 3\n0 0 0 0 0 0 0 0 0 1",
                           "GRID2 -1 1 3\n0 0 0 0 0 0 0 0 0"}) {
    std::stringstream s(text);
    EXPECT_THROW(read_grid_text(s), ParseError) << text;
  }
  EXPECT_THROW(load_grid_text(scratch("missing.txt")), ParseError);
}

TEST(GridPgm, RoundTripWithinQuantization) {
  const Grid g = random_grid(0.4, 0.05, 3);
  const fs::path p = scratch("g.pgm");
  save_grid_pgm(p, g);
  const Grid back = load_grid_pgm(p);
  EXPECT_TRUE(back.geometry() == g.geometry());
  double lo = g.values()[0], hi = lo;
  for (double v : g.values()) lo = std::min(lo, v), hi = std::max(hi, v);
  EXPECT_LE(distance(back, g, Norm::sup), 0.5 * (hi - lo) / 65535 * (1 + 1e-9));
}

TEST(GridPgm, ConstantImage) {
  Grid g(GridGeometry(0.2, 0.1));
  for (double& v : g.values()) v = -2.5;
  const fs::path p = scratch("c.pgm");
  save_grid_pgm(p, g);
  EXPECT_EQ(distance(load_grid_pgm(p), g, Norm::sup), 0.0);
}

TEST(GridPgm, SizeMismatchRejected) {
  const fs::path a = scratch("a.pgm");
  save_grid_pgm(a, random_grid(0.2, 0.1, 4));
  const fs::path b = scratch("b.pgm");
  save_grid_pgm(b, random_grid(0.4, 0.1, 5));
  fs::copy_file(a.string() + ".json", b.string() + ".json", fs::copy_options::overwrite_existing);
  EXPECT_THROW(load_grid_pgm(b), ParseError);
}

TEST(PgmStrip, WritesPanelsSideBySide) {
  const fs::path p = scratch("strip.pgm");
  save_pgm_strip(p, {random_grid(0.2, 0.1, 6), random_grid(0.3, 0.1, 7)});
  std::ifstream in(p, std::ios::binary);
  std::string magic;
  int w = 0, h = 0, maxval = 0;
  in >> magic >> w >> h >> maxval;
  EXPECT_EQ(magic, "P5");
  EXPECT_GT(w, 5 + 7);
  EXPECT_EQ(h, 7);
  EXPECT_EQ(maxval, 65535);
  EXPECT_THROW(save_pgm_strip(p, {}), PreconditionError);
}

CnnModel small_model() {
  const double h = 0.1;
  Filter a = make_filter([](Vec2 x) { return 1.0 + x.x; }, 0.15, h);
  Filter b = make_filter([](Vec2 x) { return x.y - 0.25; }, 0.2, h);
  ConvLayer l1{{{a, b}}, {0.5, -0.25}, Nonlinearity::sigmoid(2.0)};
  ConvLayer l2{{{a}, {b}}, {0.0}, Nonlinearity::relu()};
  return CnnModel({l1, l2});
}

TEST(ModelJson, RoundTripIsExact) {
  const CnnModel m = small_model();
  const fs::path p = scratch("model.json");
  save_model(p, m);
  const CnnModel back = load_model(p);
  ASSERT_EQ(back.depth(), 2u);
  for (std::size_t l = 0; l < m.depth(); ++l) {
    const ConvLayer& x = m.layers()[l];
    const ConvLayer& y = back.layers()[l];
    EXPECT_EQ(x.biases, y.biases);
    EXPECT_EQ(x.nonlinearity, y.nonlinearity);
    ASSERT_EQ(x.kernels.size(), y.kernels.size());
    for (std::size_t i = 0; i < x.kernels.size(); ++i) {
      for (std::size_t j = 0; j < x.kernels[i].size(); ++j) {
        EXPECT_EQ(x.kernels[i][j].support_radius(), y.kernels[i][j].support_radius());
        EXPECT_EQ(distance(x.kernels[i][j].grid(), y.kernels[i][j].grid(), Norm::sup), 0.0);
      }
    }
  }
}

TEST(ModelJson, Rejects) {
  using nlohmann::json;
  const json filter = filter_to_json(impulse_filter(0.1));
  EXPECT_THROW(model_from_json(json::object()), ParseError);
  EXPECT_THROW(model_from_json(json{{"layers", {{{"biases", {0.0}}}}}}), ParseError);
  json even = filter;
  even["values"] = {{1.0, 0.0}, {0.0, 0.0}};
  EXPECT_THROW(filter_from_json(even), ParseError);
  json ragged = filter;
  ragged["values"] = {{0.0, 0.0, 0.0}, {0.0, 1.0}, {0.0, 0.0, 0.0}};
  EXPECT_THROW(filter_from_json(ragged), ParseError);
  json bad_nl = model_to_json(small_model());
  bad_nl["layers"][0]["nonlinearity"] = "tanh";
  EXPECT_THROW(model_from_json(bad_nl), ParseError);
  EXPECT_NO_THROW(filter_from_json(filter));
}

}  // namespace
}  // namespace equiaudit
