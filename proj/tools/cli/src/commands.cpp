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


#include <CLI11.hpp>

#include "equiaudit/cli.hpp"
#include "equiaudit/errors.hpp"
#include "equiaudit/report.hpp"

namespace equiaudit::cli {

int cmd_audit(const RunConfig& config, std::ostream& out, std::ostream& err) {
  AuditBundle bundle;
  try {
    if (config.transforms.empty()) throw PreconditionError("no transforms to audit");
    const std::vector<TransformSpec> transforms = parse_transforms(config.transforms);
    const ModelSource model = model_source(config);
    bundle = full_audit(model, transforms, config.audit);
    write_report(config.output, bundle, {config.deterministic, true, true});
  } catch (const std::exception& e) {
    err << "equiaudit audit: " << e.what() << "\n";
    return kConfigError;
  }
  for (const auto& t : bundle.report["transforms"]) {
    out << t["spec"].get<std::string>() << "  class=" << t["class"].get<std::string>()
        << "  verdict=" << t["verdict"].get<std::string>()
        << "  expected=" << t["expected"].get<std::string>()
        << (t["match"].get<bool>() ? "" : "  MISMATCH") << "\n";
  }
  out << "report: " << (config.output / "report.json").string() << "\n";
  return bundle.all_match ? kOk : kMismatch;
}

int cmd_classify(const std::string& spec, std::ostream& out, std::ostream& err) {
  try {
    const LinearMap2 t = parse_transform(spec);
    const TransformClass cls = classify(t);
    out << cls.label();
    if (cls.canonical_angle) out << "  angle=" << *cls.canonical_angle;
    out << "  admits_invariance="
        << (alignment_admits_invariance(t) == InvarianceVerdict::yes_with_invariant_features ? "yes"
                                                                                           : "no")
        << "\n";
    return kOk;
  } catch (const std::exception& e) {
    err << "equiaudit classify: " << e.what() << "\n";
    return kConfigError;
  }
}

int cmd_demo(const std::string& name, const std::filesystem::path& out_dir, std::ostream& out,
             std::ostream& err) {
  try {
    DemoSummary s;
    if (name == "wm-rotation") {
      s = demo_wm_rotation(out_dir);
    } else if (name == "scale-fov") {
      s = demo_scale_fov(out_dir);
    } else {
      err << "equiaudit demo: unknown demo '" << name << "' (wm-rotation, scale-fov)\n";
      return kConfigError;
    }
    out << s.line() << "\n";
    return kOk;
  } catch (const std::exception& e) {
    err << "equiaudit demo: " << e.what() << "\n";
    return kConfigError;
  }
}

int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Numerical audit of feature alignment under linear image transforms", "equiaudit"};
  app.require_subcommand(1);

  auto* audit = app.add_subcommand("audit", "Run the full audit and write a report bundle");
  std::string config_path;
  std::optional<int> jobs;
  bool deterministic = false;
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> transforms;
  std::optional<double> extent;
  std::optional<double> spacing;
  std::optional<int> refinements;
  audit->add_option("--config", config_path, "Run config (JSON)");
  audit->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
  audit->add_flag("--deterministic", deterministic, "Omit the timestamp from report.json");
  audit->add_option("--out", out_dir, "Output directory");
  audit->add_option("--seed", seed, "Seed (overrides config and EQUIAUDIT_SEED)");
  audit->add_option("--transform", transforms, "Transform spec; repeat to replace the config list");
  audit->add_option("--extent", extent, "Domain half-width");
  audit->add_option("--spacing", spacing, "Finest spacing");
  audit->add_option("--refinements", refinements, "Number of coarser spacings");

  auto* classify_cmd = app.add_subcommand("classify", "Classify a transform");
  std::string spec;
  classify_cmd->add_option("spec", spec, "Transform spec, e.g. rot:36")->required();

  auto* demo = app.add_subcommand("demo", "Render an illustration");
  std::string demo_name;
  std::string demo_out = "equiaudit-demo";
  demo->add_option("name", demo_name, "wm-rotation or scale-fov")->required();
  demo->add_option("--out", demo_out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfigError;
  }

  if (*classify_cmd) return cmd_classify(spec, out, err);
  if (*demo) return cmd_demo(demo_name, demo_out, out, err);

  RunConfig config;
  try {
    if (!config_path.empty()) config = load_run_config(config_path);
    if (const auto env = seed_from_env()) config.audit.seed = *env;
  } catch (const std::exception& e) {
    err << "equiaudit audit: " << e.what() << "\n";
    return kConfigError;
  }
  if (seed) config.audit.seed = *seed;
  if (jobs) config.audit.jobs = *jobs;
  if (deterministic) config.deterministic = true;
  if (out_dir) config.output = *out_dir;
  if (!transforms.empty()) config.transforms = transforms;
  if (extent) config.audit.extent = *extent;
  if (spacing) config.audit.spacing = *spacing;
  if (refinements) config.audit.refinements = *refinements;
  return cmd_audit(config, out, err);
}

}  // namespace equiaudit::cli
