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


#ifndef EQUIAUDIT_CLI_HPP
#define EQUIAUDIT_CLI_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "equiaudit/audit.hpp"
#include "equiaudit/synth.hpp"

namespace equiaudit::cli {

enum ExitCode : int { kOk = 0, kConfigError = 1, kMismatch = 2 };

struct RunConfig {
  AuditConfig audit;
  std::vector<std::string> transforms;
  /// Loaded model file; when empty the recipe is synthesized.
  std::optional<std::filesystem::path> model_path;
  ModelRecipe recipe;
  /// The recipe seed was given explicitly instead of following `seed`.
  bool recipe_seed_set = false;
  std::filesystem::path output = "equiaudit-out";
  bool deterministic = false;
};

/**
 * Reads a run config document. Relative model paths resolve against
 * `base_dir`. Unknown keys are rejected. Throws ParseError.
 */
RunConfig parse_run_config(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);

/// EQUIAUDIT_SEED, when set to an unsigned integer.
std::optional<std::uint64_t> seed_from_env();

ModelSource model_source(const RunConfig& config);
std::vector<TransformSpec> parse_transforms(const std::vector<std::string>& specs);

/// Runs the audit and writes the bundle; returns an ExitCode.
int cmd_audit(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_classify(const std::string& spec, std::ostream& out, std::ostream& err);

struct DemoSummary {
  std::string name;
  /// Named numbers printed on the summary line, in order.
  std::vector<std::pair<std::string, double>> values;
  bool expected = false;
  std::string line() const;
};

/// Channel W and M responses to a glyph and to its half-turn.
DemoSummary demo_wm_rotation(const std::filesystem::path& out_dir, double spacing = 0.01);
/// Template response on an image and on its twofold enlargement.
DemoSummary demo_scale_fov(const std::filesystem::path& out_dir, double spacing = 0.01);

int cmd_demo(const std::string& name, const std::filesystem::path& out_dir, std::ostream& out,
             std::ostream& err);

/// Entry point for the `equiaudit` executable.
int run(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace equiaudit::cli

#endif  // EQUIAUDIT_CLI_HPP
