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


#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <set>

#include "equiaudit/cli.hpp"
#include "equiaudit/errors.hpp"
#include "equiaudit/io.hpp"

namespace equiaudit::cli {

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw ParseError(where + " must be an object");
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) throw ParseError("unknown key '" + key + "' in " + where);
  }
}

template <typename T>
T get(const json& obj, const std::string& key, T fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ParseError(where + "." + key + " has the wrong type");
  }
}

}  // namespace

RunConfig parse_run_config(const json& doc, const std::filesystem::path& base_dir) {
  reject_unknown(doc,
                 {"geometry", "transforms", "model", "corpus", "output", "seed", "jobs",
                  "deterministic", "semilocal_perturbations", "contraction_steps", "classify"},
                 "config");
  RunConfig c;
  if (doc.contains("geometry")) {
    const json& g = doc["geometry"];
    reject_unknown(g, {"extent", "spacing", "refinements"}, "geometry");
    c.audit.extent = get(g, "extent", c.audit.extent, "geometry");
    c.audit.spacing = get(g, "spacing", c.audit.spacing, "geometry");
    c.audit.refinements = get(g, "refinements", c.audit.refinements, "geometry");
  }
  c.transforms = get(doc, "transforms", c.transforms, "config");
  if (doc.contains("model")) {
    const json& m = doc["model"];
    if (m.is_string()) {
      c.model_path = base_dir / m.get<std::string>();
    } else {
      reject_unknown(m, {"path", "layers", "channels", "kernel_radius", "nonlinearity",
                         "symmetrization", "n", "bias", "seed"},
                     "model");
      if (m.contains("path")) {
        if (m.size() != 1) throw ParseError("model.path cannot be combined with recipe keys");
        c.model_path = base_dir / get<std::string>(m, "path", "", "model");
      }
      ModelRecipe& r = c.recipe;
      r.layers = get(m, "layers", r.layers, "model");
      r.channels = get(m, "channels", r.channels, "model");
      r.kernel_radius = get(m, "kernel_radius", r.kernel_radius, "model");
      if (m.contains("nonlinearity")) {
        r.nonlinearity = parse_nonlinearity(get<std::string>(m, "nonlinearity", "", "model"));
      }
      if (m.contains("symmetrization")) {
        r.symmetrization = parse_symmetrization(get<std::string>(m, "symmetrization", "", "model"));
      }
      r.n = get(m, "n", r.n, "model");
      r.bias = get(m, "bias", r.bias, "model");
      if (m.contains("seed")) {
        r.seed = get<std::uint64_t>(m, "seed", 0, "model");
        c.recipe_seed_set = true;
      }
    }
  }
  if (doc.contains("corpus")) {
    const json& k = doc["corpus"];
    reject_unknown(k, {"radius", "positions", "radius_fractions", "edge", "glyphs"}, "corpus");
    CorpusRecipe& r = c.audit.corpus;
    r.radius = get(k, "radius", r.radius, "corpus");
    r.positions = get(k, "positions", r.positions, "corpus");
    r.radius_fractions = get(k, "radius_fractions", r.radius_fractions, "corpus");
    r.edge = get(k, "edge", r.edge, "corpus");
    r.glyphs = get(k, "glyphs", r.glyphs, "corpus");
  }
  if (doc.contains("output")) c.output = base_dir / get<std::string>(doc, "output", "", "config");
  c.audit.seed = get<std::uint64_t>(doc, "seed", c.audit.seed, "config");
  c.audit.jobs = get(doc, "jobs", c.audit.jobs, "config");
  c.deterministic = get(doc, "deterministic", c.deterministic, "config");
  c.audit.semilocal_perturbations =
      get(doc, "semilocal_perturbations", c.audit.semilocal_perturbations, "config");
  c.audit.contraction_steps = get(doc, "contraction_steps", c.audit.contraction_steps, "config");
  if (doc.contains("classify")) {
    const json& k = doc["classify"];
    reject_unknown(k, {"tol", "n_max"}, "classify");
    c.audit.classify.tol = get(k, "tol", c.audit.classify.tol, "classify");
    c.audit.classify.n_max = get(k, "n_max", c.audit.classify.n_max, "classify");
  }
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError("config " + path.string() + ": " + e.what());
  }
  return parse_run_config(doc, path.parent_path());
}

std::optional<std::uint64_t> seed_from_env() {
  const char* s = std::getenv("EQUIAUDIT_SEED");
  if (!s || !*s) return std::nullopt;
  char* end = nullptr;
  errno = 0;
  const unsigned long long v = std::strtoull(s, &end, 10);
  if (errno != 0 || *end != '\0' || *s == '-') {
    throw ParseError(std::string("EQUIAUDIT_SEED is not an unsigned integer: ") + s);
  }
  return v;
}

ModelSource model_source(const RunConfig& config) {
  if (config.model_path) return fixed_model(load_model(*config.model_path), config.model_path->string());
  ModelRecipe r = config.recipe;
  if (!config.recipe_seed_set) r.seed = config.audit.seed;
  return synthesize_model(r);
}

std::vector<TransformSpec> parse_transforms(const std::vector<std::string>& specs) {
  std::vector<TransformSpec> out;
  for (const std::string& s : specs) out.push_back({s, parse_transform(s)});
  return out;
}

}  // namespace equiaudit::cli
