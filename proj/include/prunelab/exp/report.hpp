// Copyright 2026 The prunelab Authors
// Licensed under the Apache License, Version 2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "nlohmann/json.hpp"
#include "prunelab/core/errors.hpp"
#include "prunelab/exp/runner.hpp"

namespace prunelab {

/// One CSV row: a single prune step of a single run.  The last step of a run
/// doubles as its final state, since evaluation happens after every step.
struct StepRow {
  std::string run_id;
  std::string model;
  std::string dataset;
  std::string criterion;
  std::string regime;
  double target_sparsity = 0.0;
  double achieved_sparsity = 0.0;
  int step = 0;
  std::int64_t epochs_used = 0;
  std::int64_t total_budget = -1;
  double val_metric = 0.0;
  double test_metric = 0.0;
  std::uint64_t seed = 0;
  bool is_final = false; // not a CSV column; marks the run's last step
};

inline std::vector<nlohmann::json>
load_run_records(const RunPaths &paths) {
  std::vector<std::filesystem::path> files;
  if (std::filesystem::exists(paths.runs_dir()))
    for (const auto &e : std::filesystem::directory_iterator(paths.runs_dir())) {
      const std::string name = e.path().filename().string();
      if (name.size() > 5 && name.substr(name.size() - 5) == ".json" &&
          name.find(".error.") == std::string::npos)
        files.push_back(e.path());
    }
  std::sort(files.begin(), files.end());
  std::vector<nlohmann::json> records;
  for (const auto &f : files) {
    std::ifstream in(f);
    if (!in)
      throw InputError("report: cannot read " + f.string());
    records.push_back(nlohmann::json::parse(in));
  }
  return records;
}

inline std::vector<StepRow> collect_rows(const std::vector<nlohmann::json> &records) {
  std::vector<StepRow> rows;
  for (const nlohmann::json &rec : records) {
    const nlohmann::json &cfg = rec.at("config");
    const nlohmann::json &steps = rec.at("steps");
    for (std::size_t i = 0; i < steps.size(); ++i) {
      const nlohmann::json &s = steps[i];
      StepRow row;
      row.run_id = rec.at("run_id").get<std::string>();
      row.model = cfg.at("model").get<std::string>();
      row.dataset = cfg.at("dataset").at("name").get<std::string>();
      row.criterion = cfg.at("criterion").get<std::string>();
      row.regime = cfg.at("regime").at("kind").get<std::string>();
      row.target_sparsity = cfg.at("regime").at("target").get<double>();
      row.achieved_sparsity = s.at("achieved_sparsity").get<double>();
      row.step = s.at("step").get<int>();
      row.epochs_used = s.at("epochs_used").get<std::int64_t>();
      row.total_budget = cfg.at("budget_epochs").get<std::int64_t>();
      row.val_metric = s.at("val_metric").get<double>();
      row.test_metric = s.at("test_metric").get<double>();
      row.seed = cfg.at("seed").get<std::uint64_t>();
      row.is_final = i + 1 == steps.size();
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

inline void write_csv(const std::vector<StepRow> &rows,
                      const std::filesystem::path &path) {
  std::ofstream out(path);
  if (!out)
    throw InputError("report: cannot write " + path.string());
  out << "run_id,model,dataset,criterion,regime,target_sparsity,"
         "achieved_sparsity,step,epochs_used,total_budget,val_metric,"
         "test_metric,seed\n";
  out << std::setprecision(17);
  for (const StepRow &r : rows)
    out << r.run_id << ',' << r.model << ',' << r.dataset << ','
        << r.criterion << ',' << r.regime << ',' << r.target_sparsity << ','
        << r.achieved_sparsity << ',' << r.step << ',' << r.epochs_used << ','
        << r.total_budget << ',' << r.val_metric << ',' << r.test_metric
        << ',' << r.seed << "\n";
}

// ============================================================================
// SVG line charts
// ============================================================================

struct SvgSeries {
  std::string name;
  std::vector<std::pair<double, double>> points; // sorted by x at render time
};

/// Minimal self-contained line chart: axes, ticks, one polyline per series,
/// legend on the right.  Output is deterministic for identical input.
class SvgChart {
public:
  SvgChart(std::string x_label, std::string y_label)
      : x_label_(std::move(x_label)), y_label_(std::move(y_label)) {}

  void add_series(SvgSeries s) { series_.push_back(std::move(s)); }

  void render(const std::filesystem::path &path) const {
    if (series_.empty())
      throw InputError("SvgChart: nothing to render");
    std::vector<SvgSeries> series = series_;
    std::sort(series.begin(), series.end(),
              [](const SvgSeries &a, const SvgSeries &b) {
                return a.name < b.name;
              });
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (auto &s : series) {
      std::sort(s.points.begin(), s.points.end());
      for (auto &[x, y] : s.points) {
        xmin = std::min(xmin, x);
        xmax = std::max(xmax, x);
        ymin = std::min(ymin, y);
        ymax = std::max(ymax, y);
      }
    }
    if (xmin > xmax)
      throw InputError("SvgChart: all series are empty");
    if (xmax - xmin < 1e-12) {
      xmin -= 0.5;
      xmax += 0.5;
    }
    if (ymax - ymin < 1e-12) {
      ymin -= 0.5;
      ymax += 0.5;
    }
    const double pad_y = 0.06 * (ymax - ymin);
    ymin -= pad_y;
    ymax += pad_y;

    const double W = 640, H = 420, L = 64, R = 480, T = 24, B = 368;
    auto px = [&](double x) {
      return L + (x - xmin) / (xmax - xmin) * (R - L);
    };
    auto py = [&](double y) {
      return B - (y - ymin) / (ymax - ymin) * (B - T);
    };
    auto fmt = [](double v) {
      std::ostringstream os;
      os << std::setprecision(4) << v;
      return os.str();
    };

    static const char *palette[] = {"#1f77b4", "#d62728", "#2ca02c",
                                    "#9467bd", "#ff7f0e", "#8c564b",
                                    "#17becf", "#e377c2"};
    std::ostringstream svg;
    svg << std::setprecision(6);
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W
        << "\" height=\"" << H << "\" viewBox=\"0 0 " << W << " " << H
        << "\">\n";
    svg << "<rect width=\"" << W << "\" height=\"" << H
        << "\" fill=\"white\"/>\n";
    // frame and ticks
    svg << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << R - L
        << "\" height=\"" << B - T
        << "\" fill=\"none\" stroke=\"#333\" stroke-width=\"1\"/>\n";
    const int ticks = 5;
    for (int i = 0; i <= ticks; ++i) {
      const double xv = xmin + (xmax - xmin) * i / ticks;
      const double yv = ymin + (ymax - ymin) * i / ticks;
      svg << "<line x1=\"" << px(xv) << "\" y1=\"" << B << "\" x2=\""
          << px(xv) << "\" y2=\"" << B + 5
          << "\" stroke=\"#333\" stroke-width=\"1\"/>\n";
      svg << "<text x=\"" << px(xv) << "\" y=\"" << B + 18
          << "\" font-size=\"11\" text-anchor=\"middle\" fill=\"#333\" "
             "font-family=\"sans-serif\">"
          << fmt(xv) << "</text>\n";
      svg << "<line x1=\"" << L - 5 << "\" y1=\"" << py(yv) << "\" x2=\"" << L
          << "\" y2=\"" << py(yv)
          << "\" stroke=\"#333\" stroke-width=\"1\"/>\n";
      svg << "<text x=\"" << L - 8 << "\" y=\"" << py(yv) + 4
          << "\" font-size=\"11\" text-anchor=\"end\" fill=\"#333\" "
             "font-family=\"sans-serif\">"
          << fmt(yv) << "</text>\n";
    }
    svg << "<text x=\"" << (L + R) / 2 << "\" y=\"" << B + 38
        << "\" font-size=\"13\" text-anchor=\"middle\" fill=\"#111\" "
           "font-family=\"sans-serif\">"
        << x_label_ << "</text>\n";
    svg << "<text x=\"16\" y=\"" << (T + B) / 2
        << "\" font-size=\"13\" text-anchor=\"middle\" fill=\"#111\" "
           "font-family=\"sans-serif\" transform=\"rotate(-90 16 "
        << (T + B) / 2 << ")\">" << y_label_ << "</text>\n";
    // series
    for (std::size_t si = 0; si < series.size(); ++si) {
      const char *color = palette[si % 8];
      const auto &pts = series[si].points;
      if (!pts.empty()) {
        svg << "<polyline fill=\"none\" stroke=\"" << color
            << "\" stroke-width=\"2\" points=\"";
        for (auto &[x, y] : pts)
          svg << px(x) << "," << py(y) << " ";
        svg << "\"/>\n";
        for (auto &[x, y] : pts)
          svg << "<circle cx=\"" << px(x) << "\" cy=\"" << py(y)
              << "\" r=\"3\" fill=\"" << color << "\"/>\n";
      }
      const double ly = T + 16 + 18 * static_cast<double>(si);
      svg << "<line x1=\"" << R + 12 << "\" y1=\"" << ly << "\" x2=\""
          << R + 34 << "\" y2=\"" << ly << "\" stroke=\"" << color
          << "\" stroke-width=\"2\"/>\n";
      svg << "<text x=\"" << R + 40 << "\" y=\"" << ly + 4
          << "\" font-size=\"12\" fill=\"#111\" "
             "font-family=\"sans-serif\">"
          << series[si].name << "</text>\n";
    }
    svg << "</svg>\n";

    std::ofstream out(path);
    if (!out)
      throw InputError("SvgChart: cannot write " + path.string());
    out << svg.str();
  }

private:
  std::string x_label_, y_label_;
  std::vector<SvgSeries> series_;
};

// ============================================================================
// Report kinds
// ============================================================================

namespace detail {

/// Mean of final-step test metrics grouped by (series key, x coordinate).
inline std::map<std::string, std::map<double, std::pair<double, int>>>
group_final(const std::vector<StepRow> &rows,
            const std::string &(*key)(const StepRow &),
            double (*x_of)(const StepRow &)) {
  std::map<std::string, std::map<double, std::pair<double, int>>> acc;
  for (const StepRow &r : rows) {
    if (!r.is_final)
      continue;
    auto &[sum, n] = acc[key(r)][x_of(r)];
    sum += r.test_metric;
    n += 1;
  }
  return acc;
}

} // namespace detail

enum class ReportKind { ratio_curve, budget_curve, criteria_best };

inline ReportKind parse_report_kind(const std::string &s) {
  if (s == "ratio_curve")
    return ReportKind::ratio_curve;
  if (s == "budget_curve")
    return ReportKind::budget_curve;
  if (s == "criteria_best")
    return ReportKind::criteria_best;
  throw ConfigError("report: unknown kind '" + s + "'");
}

/// Writes the flat per-step CSV plus the chart for the requested view:
///   ratio_curve    final test metric vs target sparsity, one line per regime
///   budget_curve   final test metric vs retraining budget, per regime
///                  (rows without a finite budget are not plotted)
///   criteria_best  best-over-regimes final test metric vs target sparsity,
///                  one line per criterion
/// Seeds sharing identical coordinates are averaged.
inline void write_report(ReportKind kind, const std::vector<StepRow> &rows,
                         const std::filesystem::path &csv_path,
                         const std::filesystem::path &svg_path) {
  if (rows.empty())
    throw InputError("report: no run records found");
  write_csv(rows, csv_path);

  if (kind == ReportKind::ratio_curve || kind == ReportKind::budget_curve) {
    std::map<std::string, std::map<double, std::pair<double, int>>> acc;
    for (const StepRow &r : rows) {
      if (!r.is_final)
        continue;
      if (kind == ReportKind::budget_curve && r.total_budget < 0)
        continue;
      const double x = kind == ReportKind::ratio_curve
                           ? r.target_sparsity
                           : static_cast<double>(r.total_budget);
      auto &[sum, n] = acc[r.regime][x];
      sum += r.test_metric;
      n += 1;
    }
    SvgChart chart(kind == ReportKind::ratio_curve ? "target sparsity"
                                                   : "retraining epoch budget",
                   "test accuracy");
    for (auto &[name, pts] : acc) {
      SvgSeries s;
      s.name = name;
      for (auto &[x, agg] : pts)
        s.points.push_back({x, agg.first / agg.second});
      chart.add_series(std::move(s));
    }
    chart.render(svg_path);
    return;
  }

  // criteria_best: collapse regimes by max of the seed-averaged metric.
  std::map<std::string, std::map<double, std::map<std::string, std::pair<double, int>>>>
      acc;
  for (const StepRow &r : rows) {
    if (!r.is_final)
      continue;
    auto &[sum, n] = acc[r.criterion][r.target_sparsity][r.regime];
    sum += r.test_metric;
    n += 1;
  }
  SvgChart chart("target sparsity", "best test accuracy");
  for (auto &[crit, by_x] : acc) {
    SvgSeries s;
    s.name = crit;
    for (auto &[x, by_regime] : by_x) {
      double best = -1e300;
      for (auto &[_, agg] : by_regime)
        best = std::max(best, agg.first / agg.second);
      s.points.push_back({x, best});
    }
    chart.add_series(std::move(s));
  }
  chart.render(svg_path);
}

} // namespace prunelab
