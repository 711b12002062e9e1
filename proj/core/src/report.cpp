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


#include "equiaudit/report.hpp"

#include <charconv>
#include <chrono>
#include <ctime>
#include <fstream>

#include "equiaudit/errors.hpp"
#include "equiaudit/io.hpp"

namespace equiaudit {

namespace {

std::string shortest(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

std::string report_text(const AuditBundle& bundle, const ReportOptions& options) {
  // nlohmann::json objects keep keys sorted, so the dump order is stable.
  nlohmann::json doc = bundle.report;
  doc["version"] = "0.1.0";
  doc["deterministic"] = options.deterministic;
  if (!options.deterministic) doc["generated_at"] = utc_now();
  return doc.dump(2) + "\n";
}

void write_curve_csv(const std::filesystem::path& path, const CurveExport& curve) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  for (std::size_t i = 0; i < curve.columns.size(); ++i) {
    out << (i ? "," : "") << curve.columns[i];
  }
  out << "\n";
  for (const auto& row : curve.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << shortest(row[i]);
    out << "\n";
  }
  if (!out) throw Error("failed writing " + path.string());
}

void write_report(const std::filesystem::path& dir, const AuditBundle& bundle,
                  const ReportOptions& options) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error("cannot create " + dir.string() + ": " + ec.message());
  {
    std::ofstream out(dir / "report.json", std::ios::binary);
    if (!out) throw Error("cannot write " + (dir / "report.json").string());
    out << report_text(bundle, options);
    if (!out) throw Error("failed writing report.json");
  }
  if (options.write_curves && !bundle.curves.empty()) {
    std::filesystem::create_directories(dir / "curves", ec);
    if (ec) throw Error("cannot create curves/: " + ec.message());
    for (const CurveExport& c : bundle.curves) write_curve_csv(dir / "curves" / (c.name + ".csv"), c);
  }
  if (options.write_images && !bundle.images.empty()) {
    std::filesystem::create_directories(dir / "images", ec);
    if (ec) throw Error("cannot create images/: " + ec.message());
    for (const ImageExport& im : bundle.images) {
      save_pgm_strip(dir / "images" / (im.name + ".pgm"), im.panels);
    }
  }
}

}  // namespace equiaudit
