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

#include "equiaudit/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "equiaudit/errors.hpp"

namespace equiaudit {

namespace {

std::string shortest(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::ifstream open_in(const std::filesystem::path& path, std::ios::openmode mode) {
  std::ifstream in(path, mode);
  if (!in) throw ParseError("cannot open " + path.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& path, std::ios::openmode mode) {
  std::ofstream out(path, mode);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

void write_p5(std::ostream& out, int width, int height, const std::vector<std::uint16_t>& px) {
  out << "P5\n" << width << " " << height << "\n65535\n";
  for (std::uint16_t v : px) {
    const char bytes[2] = {static_cast<char>(v >> 8), static_cast<char>(v & 0xff)};
    out.write(bytes, 2);
  }
}

std::uint16_t quantize(double v, double lo, double hi) {
  if (!(hi > lo)) return 0;
  const double q = std::round((v - lo) / (hi - lo) * 65535.0);
  return static_cast<std::uint16_t>(std::clamp(q, 0.0, 65535.0));
}

// Next whitespace-delimited header token, skipping '#' comments.
std::string pgm_token(std::istream& in) {
  std::string tok;
  char ch = 0;
  while (in.get(ch)) {
    if (ch == '#') {
      std::string line;
      std::getline(in, line);
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(ch))) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(ch);
  }
  return tok;
}

int pgm_int(std::istream& in) {
  const std::string tok = pgm_token(in);
  int v = 0;
  const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (tok.empty() || res.ec != std::errc() || res.ptr != tok.data() + tok.size() || v <= 0) {
    throw ParseError("bad PGM header field '" + tok + "'");
  }
  return v;
}

double json_number(const nlohmann::json& j, const char* key) {
  if (!j.is_object() || !j.contains(key) || !j.at(key).is_number()) {
    throw ParseError(std::string("missing numeric field '") + key + "'");
  }
  return j.at(key).get<double>();
}

}  // namespace

void write_grid_text(std::ostream& out, const Grid& g) {
  out << "GRID2 " << shortest(g.geometry().extent()) << " " << shortest(g.spacing()) << " "
      << g.side() << "\n";
  const int k = g.half_count();
  for (int y = k; y >= -k; --y) {
    for (int x = -k; x <= k; ++x) {
      if (x > -k) out << ' ';
      out << shortest(g.at(x, y));
    }
    out << '\n';
  }
}

Grid read_grid_text(std::istream& in) {
  std::string magic;
  double extent = 0.0;
  double spacing = 0.0;
  long n = 0;
  if (!(in >> magic >> extent >> spacing >> n) || magic != "GRID2") {
    throw ParseError("expected header 'GRID2 <extent> <spacing> <n>'");
  }
  if (!(extent > 0.0) || !(spacing > 0.0)) throw ParseError("extent and spacing must be > 0");
  GridGeometry geometry(extent, spacing);
  if (n != geometry.side()) {
    throw ParseError("sample count " + std::to_string(n) + " does not match extent/spacing (" +
                     std::to_string(geometry.side()) + ")");
  }
  std::vector<double> values(geometry.sample_count());
  for (double& v : values) {
    if (!(in >> v)) throw ParseError("grid file ended early or holds a non-number");
  }
  std::string extra;
  if (in >> extra) throw ParseError("trailing data after grid values");
  return Grid(geometry, std::move(values));
}

void save_grid_text(const std::filesystem::path& path, const Grid& g) {
  auto out = open_out(path, std::ios::out);
  write_grid_text(out, g);
}

Grid load_grid_text(const std::filesystem::path& path) {
  auto in = open_in(path, std::ios::in);
  return read_grid_text(in);
}

void save_grid_pgm(const std::filesystem::path& path, const Grid& g) {
  const auto values = g.values();
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  std::vector<std::uint16_t> px(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) px[i] = quantize(values[i], lo, hi);
  {
    auto out = open_out(path, std::ios::out | std::ios::binary);
    write_p5(out, g.side(), g.side(), px);
  }
  nlohmann::json meta = {{"extent", g.geometry().extent()},
                         {"spacing", g.spacing()},
                         {"value_min", lo},
                         {"value_max", hi}};
  auto side = open_out(path.string() + ".json", std::ios::out);
  side << meta.dump(2) << "\n";
}

Grid load_grid_pgm(const std::filesystem::path& path) {
  nlohmann::json meta;
  {
    auto side = open_in(path.string() + ".json", std::ios::in);
    try {
      side >> meta;
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("bad PGM sidecar: " + std::string(e.what()));
    }
  }
  const double extent = json_number(meta, "extent");
  const double spacing = json_number(meta, "spacing");
  const double lo = json_number(meta, "value_min");
  const double hi = json_number(meta, "value_max");
  GridGeometry geometry(extent, spacing);

  auto in = open_in(path, std::ios::in | std::ios::binary);
  if (pgm_token(in) != "P5") throw ParseError("not a binary PGM (P5)");
  const int width = pgm_int(in);
  const int height = pgm_int(in);
  const int maxval = pgm_int(in);
  if (width != geometry.side() || height != geometry.side()) {
    throw ParseError("PGM size does not match the sidecar geometry");
  }
  if (maxval > 65535) throw ParseError("PGM maxval above 65535");
  const bool wide = maxval > 255;
  std::vector<double> values(geometry.sample_count());
  for (double& v : values) {
    unsigned q = 0;
    unsigned char bytes[2] = {0, 0};
    if (!in.read(reinterpret_cast<char*>(bytes), wide ? 2 : 1)) {
      throw ParseError("PGM pixel data ended early");
    }
    q = wide ? (static_cast<unsigned>(bytes[0]) << 8 | bytes[1]) : bytes[0];
    v = lo + (hi - lo) * (static_cast<double>(q) / maxval);
  }
  return Grid(geometry, std::move(values));
}

void save_pgm_strip(const std::filesystem::path& path, const std::vector<Grid>& panels) {
  if (panels.empty()) throw PreconditionError("no panels to write");
  constexpr int kGap = 2;
  int height = 0;
  int width = 0;
  double lo = 0.0;
  double hi = 0.0;
  bool first = true;
  for (const Grid& g : panels) {
    height = std::max(height, g.side());
    width += g.side();
    for (double v : g.values()) {
      lo = first ? v : std::min(lo, v);
      hi = first ? v : std::max(hi, v);
      first = false;
    }
  }
  width += kGap * static_cast<int>(panels.size() - 1);
  std::vector<std::uint16_t> px(static_cast<std::size_t>(width) * height, 65535);
  int x0 = 0;
  for (const Grid& g : panels) {
    const auto values = g.values();
    for (int r = 0; r < g.side(); ++r) {
      for (int c = 0; c < g.side(); ++c) {
        px[static_cast<std::size_t>(r) * width + x0 + c] =
            quantize(values[static_cast<std::size_t>(r) * g.side() + c], lo, hi);
      }
    }
    x0 += g.side() + kGap;
  }
  auto out = open_out(path, std::ios::out | std::ios::binary);
  write_p5(out, width, height, px);
}

nlohmann::json filter_to_json(const Filter& f) {
  const Grid& g = f.grid();
  const int k = g.half_count();
  nlohmann::json rows = nlohmann::json::array();
  for (int y = k; y >= -k; --y) {
    nlohmann::json row = nlohmann::json::array();
    for (int x = -k; x <= k; ++x) row.push_back(g.at(x, y));
    rows.push_back(std::move(row));
  }
  return {{"spacing", f.spacing()}, {"support_radius", f.support_radius()}, {"values", rows}};
}

Filter filter_from_json(const nlohmann::json& j) {
  const double spacing = json_number(j, "spacing");
  const double radius = json_number(j, "support_radius");
  if (!j.contains("values") || !j.at("values").is_array()) {
    throw ParseError("filter needs a 'values' array of rows");
  }
  const auto& rows = j.at("values");
  const std::size_t n = rows.size();
  if (n % 2 == 0) throw ParseError("filter grid side must be odd");
  if (!(spacing > 0.0)) throw ParseError("filter spacing must be > 0");
  const int k = static_cast<int>(n / 2);
  GridGeometry geometry(std::max(k, 1) * spacing, spacing);
  Grid g(geometry);
  for (std::size_t r = 0; r < n; ++r) {
    if (!rows[r].is_array() || rows[r].size() != n) throw ParseError("filter grid must be square");
    for (std::size_t c = 0; c < n; ++c) {
      if (!rows[r][c].is_number()) throw ParseError("filter values must be numbers");
      g.at(static_cast<int>(c) - k, k - static_cast<int>(r)) = rows[r][c].get<double>();
    }
  }
  return Filter(std::move(g), radius);
}

nlohmann::json model_to_json(const CnnModel& model) {
  nlohmann::json layers = nlohmann::json::array();
  for (const ConvLayer& layer : model.layers()) {
    nlohmann::json kernels = nlohmann::json::array();
    for (const auto& row : layer.kernels) {
      nlohmann::json jr = nlohmann::json::array();
      for (const Filter& f : row) jr.push_back(filter_to_json(f));
      kernels.push_back(std::move(jr));
    }
    layers.push_back({{"kernels", std::move(kernels)},
                      {"biases", layer.biases},
                      {"nonlinearity", to_string(layer.nonlinearity)}});
  }
  return {{"layers", std::move(layers)}};
}

CnnModel model_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("layers") || !j.at("layers").is_array()) {
    throw ParseError("model needs a 'layers' array");
  }
  std::vector<ConvLayer> layers;
  for (const auto& jl : j.at("layers")) {
    ConvLayer layer;
    if (!jl.contains("kernels") || !jl.at("kernels").is_array()) {
      throw ParseError("layer needs a 'kernels' matrix");
    }
    for (const auto& jr : jl.at("kernels")) {
      if (!jr.is_array()) throw ParseError("kernel matrix rows must be arrays");
      std::vector<Filter> row;
      for (const auto& jf : jr) row.push_back(filter_from_json(jf));
      layer.kernels.push_back(std::move(row));
    }
    if (!jl.contains("biases") || !jl.at("biases").is_array()) {
      throw ParseError("layer needs a 'biases' array");
    }
    for (const auto& b : jl.at("biases")) {
      if (!b.is_number()) throw ParseError("biases must be numbers");
      layer.biases.push_back(b.get<double>());
    }
    layer.nonlinearity = parse_nonlinearity(jl.value("nonlinearity", std::string("identity")));
    layers.push_back(std::move(layer));
  }
  return CnnModel(std::move(layers));
}

void save_model(const std::filesystem::path& path, const CnnModel& model) {
  auto out = open_out(path, std::ios::out);
  out << model_to_json(model).dump() << "\n";
}

CnnModel load_model(const std::filesystem::path& path) {
  auto in = open_in(path, std::ios::in);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("bad model file: " + std::string(e.what()));
  }
  return model_from_json(j);
}

}  // namespace equiaudit
