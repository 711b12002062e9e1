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


#ifndef EQUIAUDIT_REPORT_HPP
#define EQUIAUDIT_REPORT_HPP

#include <filesystem>
#include <string>

#include "equiaudit/audit.hpp"

namespace equiaudit {

struct ReportOptions {
  /// Leave out the wall-clock timestamp so reruns are byte-identical.
  bool deterministic = false;
  bool write_curves = true;
  bool write_images = true;
};

/// JSON text with sorted keys, two-space indent and a trailing newline.
std::string report_text(const AuditBundle& bundle, const ReportOptions& options = {});

/**
 * Writes report.json, curves/<name>.csv and images/<name>.pgm under `dir`,
 * creating directories as needed. Throws Error on I/O failure.
 */
void write_report(const std::filesystem::path& dir, const AuditBundle& bundle,
                  const ReportOptions& options = {});

/// Rows as CSV with a header line; doubles in shortest round-trip form.
void write_curve_csv(const std::filesystem::path& path, const CurveExport& curve);

}  // namespace equiaudit

#endif  // EQUIAUDIT_REPORT_HPP
