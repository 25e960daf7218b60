// Copyright 2026 The prunegan Authors. All Rights Reserved.
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

#pragma once

// Static reports. Everything here is a pure function of a run directory's
// metrics log, resolved manifest and evaluation record, so re-running a
// report reproduces the same bytes. Wall-clock times are never written.

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "prunegan/config.hpp"
#include "prunegan/errors.hpp"
#include "prunegan/evaluation.hpp"
#include "prunegan/metrics_log.hpp"

namespace prunegan {

/// One evaluated run, as a table row.
struct ReportRow {
  std::string recipe;
  std::string title;
  std::string granularity;
  double sparsity = 0.0;
  std::int64_t steps = 0;
  std::optional<double> fid;
  std::optional<double> fid_dense;
  std::optional<double> relative_change;
  std::optional<double> psnr;
  std::optional<double> ssim;
  std::string extractor;
};

inline std::string format_number(const std::optional<double>& v) {
  if (!v) return "";
  if (std::isnan(*v)) return "nan";
  if (std::isinf(*v)) return *v > 0 ? "inf" : "-inf";
  return fmt::format("{:.6f}", *v);
}

inline std::optional<double> optional_number(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  const auto& v = j.at(key);
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    return std::numeric_limits<double>::quiet_NaN();
  }
  return v.get<double>();
}

inline ReportRow report_row(const ExperimentManifest& m, const nlohmann::json& evaluation) {
  ReportRow r;
  r.recipe = std::string(1, m.strategy.recipe_id);
  r.title = m.strategy.title;
  r.granularity = std::string(to_string(m.granularity));
  r.steps = m.total_steps;
  r.sparsity = evaluation.value("sparsity", 0.0);
  r.fid = optional_number(evaluation, "fid");
  r.fid_dense = optional_number(evaluation, "fid_dense");
  r.relative_change = optional_number(evaluation, "relative_change");
  r.psnr = optional_number(evaluation, "psnr");
  r.ssim = optional_number(evaluation, "ssim");
  r.extractor = evaluation.value("extractor", "");
  return r;
}

namespace detail {

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline nlohmann::json json_number(const std::optional<double>& v) {
  if (!v) return nullptr;
  if (!std::isfinite(*v)) return format_number(v);
  return *v;
}

}  // namespace detail

/// One summary row per recipe.
inline std::string comparison_csv(const std::vector<ReportRow>& rows) {
  std::string out =
      "recipe,title,granularity,steps,sparsity,fid,fid_dense,relative_change,psnr,ssim\n";
  for (const auto& r : rows) {
    out += fmt::format("{},{},{},{},{:.6f},{},{},{},{},{}\n", r.recipe,
                       detail::csv_field(r.title), r.granularity, r.steps, r.sparsity,
                       format_number(r.fid), format_number(r.fid_dense),
                       format_number(r.relative_change), format_number(r.psnr),
                       format_number(r.ssim));
  }
  return out;
}

inline nlohmann::json comparison_json(const std::vector<ReportRow>& rows) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : rows) {
    out.push_back({{"recipe", r.recipe},
                   {"title", r.title},
                   {"granularity", r.granularity},
                   {"steps", r.steps},
                   {"sparsity", r.sparsity},
                   {"fid", detail::json_number(r.fid)},
                   {"fid_dense", detail::json_number(r.fid_dense)},
                   {"relative_change", detail::json_number(r.relative_change)},
                   {"psnr", detail::json_number(r.psnr)},
                   {"ssim", detail::json_number(r.ssim)},
                   {"extractor", r.extractor}});
  }
  return out;
}

/// Dense row at sparsity 0 followed by the compressed row, FID per row.
inline std::string fid_table_csv(const std::string& model, const std::vector<ReportRow>& rows) {
  std::string out = "model,granularity,sparsity,fid\n";
  std::set<std::string> dense_done;
  for (const auto& r : rows) {
    if (r.fid_dense && !dense_done.count(model)) {
      out += fmt::format("{},dense,{:.6f},{}\n", model, 0.0, format_number(r.fid_dense));
      dense_done.insert(model);
    }
    out += fmt::format("{},{},{:.6f},{}\n", model, r.granularity, r.sparsity,
                       format_number(r.fid));
  }
  return out;
}

struct ChartSeries {
  std::string name;
  std::vector<std::pair<double, double>> points;
};

/// Minimal static line chart.
inline std::string line_chart_svg(const std::string& title, const std::string& x_label,
                                  const std::string& y_label,
                                  const std::vector<ChartSeries>& series, bool markers = false) {
  constexpr double W = 640, H = 400, L = 70, R = 150, T = 40, B = 50;
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : series) {
    for (const auto& [x, y] : s.points) {
      if (!std::isfinite(x) || !std::isfinite(y)) continue;
      x0 = std::min(x0, x);
      x1 = std::max(x1, x);
      y0 = std::min(y0, y);
      y1 = std::max(y1, y);
    }
  }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 == x0) x1 = x0 + 1;
  if (y1 == y0) y1 = y0 + 1;
  const double pad = 0.05 * (y1 - y0);
  y0 -= pad;
  y1 += pad;
  auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                 "#8c564b", "#e377c2", "#7f7f7f"};
  std::string out = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.0f}\" height=\"{:.0f}\" "
      "font-family=\"sans-serif\" font-size=\"12\">\n"
      "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      "<text x=\"{:.1f}\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n",
      W, H, (L + W - R) / 2, title);
  out += fmt::format(
      "<line x1=\"{0:.1f}\" y1=\"{1:.1f}\" x2=\"{2:.1f}\" y2=\"{1:.1f}\" stroke=\"black\"/>\n"
      "<line x1=\"{0:.1f}\" y1=\"{1:.1f}\" x2=\"{0:.1f}\" y2=\"{3:.1f}\" stroke=\"black\"/>\n",
      L, H - B, W - R, T);
  for (int i = 0; i <= 4; ++i) {
    const double xv = x0 + (x1 - x0) * i / 4;
    const double yv = y0 + (y1 - y0) * i / 4;
    out += fmt::format(
        "<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\">{:.4g}</text>\n"
        "<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"end\">{:.4g}</text>\n",
        px(xv), H - B + 16, xv, L - 6, py(yv) + 4, yv);
  }
  out += fmt::format(
      "<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\">{}</text>\n"
      "<text x=\"16\" y=\"{:.1f}\" text-anchor=\"middle\" "
      "transform=\"rotate(-90 16 {:.1f})\">{}</text>\n",
      (L + W - R) / 2, H - 12, x_label, (T + H - B) / 2, (T + H - B) / 2, y_label);
  for (std::size_t k = 0; k < series.size(); ++k) {
    const char* color = colors[k % 8];
    std::string pts;
    for (const auto& [x, y] : series[k].points) {
      if (!std::isfinite(x) || !std::isfinite(y)) continue;
      pts += fmt::format("{:.2f},{:.2f} ", px(x), py(y));
      if (markers) {
        out += fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"3\" fill=\"{}\"/>\n", px(x),
                           py(y), color);
      }
    }
    if (!pts.empty()) pts.pop_back();
    out += fmt::format(
        "<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.2\" points=\"{}\"/>\n", color,
        pts);
    out += fmt::format(
        "<line x1=\"{0:.1f}\" y1=\"{1:.1f}\" x2=\"{2:.1f}\" y2=\"{1:.1f}\" stroke=\"{3}\" "
        "stroke-width=\"2\"/>\n<text x=\"{4:.1f}\" y=\"{5:.1f}\">{6}</text>\n",
        W - R + 10, T + 10 + 18.0 * k, W - R + 30, color, W - R + 36, T + 14 + 18.0 * k,
        series[k].name);
  }
  out += "</svg>\n";
  return out;
}

inline std::vector<ChartSeries> loss_series(const std::vector<MetricsRecord>& log) {
  std::vector<ChartSeries> out;
  for (const char* key : {"L_Overall", "L_GC", "L_DC", "generator_objective",
                          "discriminator_objective"}) {
    ChartSeries s{key, {}};
    for (const auto& r : log) {
      auto it = r.scalars.find(key);
      if (it != r.scalars.end()) s.points.emplace_back(static_cast<double>(r.step), it->second);
    }
    if (!s.points.empty()) out.push_back(std::move(s));
  }
  return out;
}

/// Metrics log as CSV: step plus the union of scalar names, sorted.
inline std::string metrics_csv(const std::vector<MetricsRecord>& log) {
  std::set<std::string> keys;
  for (const auto& r : log) {
    for (const auto& [k, v] : r.scalars) keys.insert(k);
  }
  std::string out = "step";
  for (const auto& k : keys) out += "," + k;
  out += "\n";
  for (const auto& r : log) {
    out += std::to_string(r.step);
    for (const auto& k : keys) {
      auto it = r.scalars.find(k);
      out += ",";
      if (it != r.scalars.end()) out += fmt::format("{:.9g}", it->second);
    }
    out += "\n";
  }
  return out;
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

inline nlohmann::json read_evaluation(const std::filesystem::path& run_dir) {
  const auto path = run_dir / "evaluation.json";
  if (!std::filesystem::exists(path)) return nullptr;
  return read_json_file(path);
}

/// Writes the report of one run into <run_dir>/report and returns the files.
inline std::vector<std::filesystem::path> write_run_report(const std::filesystem::path& run_dir) {
  const auto manifest_path = run_dir / "resolved_manifest.json";
  const auto log_path = run_dir / "metrics.jsonl";
  if (!std::filesystem::exists(manifest_path)) {
    throw ConfigError("no resolved_manifest.json in " + run_dir.string());
  }
  if (!std::filesystem::exists(log_path)) throw IoError("no metrics.jsonl in " + run_dir.string());
  const ExperimentManifest m = manifest_from_json(read_json_file(manifest_path));
  const auto log = read_metrics_log(log_path);
  const auto dir = run_dir / "report";
  std::vector<std::filesystem::path> files;
  auto emit = [&](const std::string& name, const std::string& text) {
    write_text_file(dir / name, text);
    files.push_back(dir / name);
  };
  const std::string label = m.task + " recipe " + std::string(1, m.strategy.recipe_id);
  emit("loss_curve.svg", line_chart_svg("Losses, " + label, "step", "loss", loss_series(log)));
  ChartSeries sparsity{"sparsity", {}};
  ChartSeries target{"target", {}};
  for (const auto& r : log) {
    if (auto it = r.scalars.find("sparsity"); it != r.scalars.end()) {
      sparsity.points.emplace_back(static_cast<double>(r.step), it->second);
    }
    if (auto it = r.scalars.find("target_sparsity"); it != r.scalars.end()) {
      target.points.emplace_back(static_cast<double>(r.step), it->second);
    }
  }
  emit("sparsity_trace.svg",
       line_chart_svg("Sparsity, " + label, "step", "sparsity", {sparsity, target}));
  emit("metrics.csv", metrics_csv(log));

  const auto evaluation = read_evaluation(run_dir);
  if (!evaluation.is_null()) {
    const std::vector<ReportRow> rows{report_row(m, evaluation)};
    emit("fid_table.csv", fid_table_csv(m.task, rows));
    emit("summary.csv", comparison_csv(rows));
    emit("summary.json", comparison_json(rows).dump(2) + "\n");
    ChartSeries fid{"FID", {}};
    if (rows[0].fid_dense) fid.points.emplace_back(0.0, *rows[0].fid_dense);
    if (rows[0].fid) fid.points.emplace_back(rows[0].sparsity, *rows[0].fid);
    emit("fid_vs_sparsity.svg",
         line_chart_svg("FID vs sparsity, " + label, "sparsity", "FID", {fid}, true));
  }
  return files;
}

/// FID against sparsity, one series per granularity.
inline std::string fid_vs_sparsity_svg(const std::string& title, const std::vector<ReportRow>& rows) {
  std::map<std::string, ChartSeries> by;
  for (const auto& r : rows) {
    auto& s = by[r.granularity];
    s.name = r.granularity;
    if (r.fid_dense && s.points.empty()) s.points.emplace_back(0.0, *r.fid_dense);
    if (r.fid) s.points.emplace_back(r.sparsity, *r.fid);
  }
  std::vector<ChartSeries> series;
  for (auto& [k, s] : by) {
    std::sort(s.points.begin(), s.points.end());
    series.push_back(std::move(s));
  }
  return line_chart_svg(title, "sparsity", "FID", series, true);
}

}  // namespace prunegan
