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

#ifndef EQUIAUDIT_IO_HPP
#define EQUIAUDIT_IO_HPP

#include <filesystem>
#include <iosfwd>
#include <string>

#include <nlohmann/json.hpp>

#include "equiaudit/conv.hpp"
#include "equiaudit/grid.hpp"

/**
 * \file
 * \brief Grid and model files.
 *
 * Text grids: a header line `GRID2 <extent> <spacing> <n>` followed by n*n
 * values, top row first. Images: 16-bit binary PGM plus a JSON sidecar holding
 * {extent, spacing, value_min, value_max}. Models: JSON with
 * layers[{kernels: [[{values, spacing, support_radius}]], biases, nonlinearity}].
 */

namespace equiaudit {

void write_grid_text(std::ostream& out, const Grid& g);
/// Throws ParseError on malformed input.
Grid read_grid_text(std::istream& in);

void save_grid_text(const std::filesystem::path& path, const Grid& g);
Grid load_grid_text(const std::filesystem::path& path);

/// Writes `<path>` (P5, maxval 65535) and `<path>.json`.
void save_grid_pgm(const std::filesystem::path& path, const Grid& g);
/// Reads a PGM and its sidecar; values are dequantized affinely.
Grid load_grid_pgm(const std::filesystem::path& path);

/// Several grids side by side with one shared value range, as a 16-bit P5 image.
void save_pgm_strip(const std::filesystem::path& path, const std::vector<Grid>& panels);

nlohmann::json filter_to_json(const Filter& f);
Filter filter_from_json(const nlohmann::json& j);

nlohmann::json model_to_json(const CnnModel& model);
/// Throws ParseError on schema violations, PreconditionError on invalid models.
CnnModel model_from_json(const nlohmann::json& j);

void save_model(const std::filesystem::path& path, const CnnModel& model);
CnnModel load_model(const std::filesystem::path& path);

}  // namespace equiaudit

#endif  // EQUIAUDIT_IO_HPP
