#include "holoarm/io.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

namespace holoarm {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

std::string read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

int CsvTable::column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  require(it != header.end(), "csv has no column '" + name + "'");
  return static_cast<int>(it - header.begin());
}

std::vector<double> CsvTable::numbers(const std::string& name) const {
  const int c = column(name);
  std::vector<double> out;
  out.reserve(rows.size());
  for (size_t r = 0; r < rows.size(); ++r) {
    const std::string& cell = rows[r][c];
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (ec != std::errc() || ptr != cell.data() + cell.size()) {
      throw ParseError(fmt::format("column '{}': not a number '{}'", name, cell), static_cast<int>(r) + 2);
    }
    out.push_back(v);
  }
  return out;
}

CsvTable parse_csv(const std::string& text) {
  CsvTable t;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (trim(raw).empty()) continue;
    auto cells = split(trim(raw));
    if (t.header.empty()) {
      t.header = std::move(cells);
      continue;
    }
    if (cells.size() != t.header.size()) {
      throw ParseError(fmt::format("expected {} columns, got {}", t.header.size(), cells.size()), line);
    }
    t.rows.push_back(std::move(cells));
  }
  if (t.header.empty()) throw ParseError("empty csv", 0);
  return t;
}

CsvTable read_csv(const std::filesystem::path& path) { return parse_csv(read_all(path)); }

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  out.flush();
  if (!out) throw IoError("failed writing " + path.string());
}

// ---------------------------------------------------------------------------
// SVG

namespace {

constexpr double kWidth = 640.0, kHeight = 420.0;
constexpr double kLeft = 72.0, kRight = 20.0, kTop = 40.0, kBottom = 56.0;
constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

struct Range1 {
  double lo = 0.0, hi = 1.0;
};

double nice_step(double span) {
  const double raw = span / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double f = raw / mag;
  const double m = f < 1.5 ? 1.0 : f < 3.0 ? 2.0 : f < 7.0 ? 5.0 : 10.0;
  return m * mag;
}

Range1 padded(double lo, double hi) {
  if (!(hi > lo)) {
    const double d = std::max(1.0, std::abs(lo)) * 0.5;
    return {lo - d, hi + d};
  }
  const double step = nice_step(hi - lo);
  return {std::floor(lo / step) * step, std::ceil(hi / step) * step};
}

std::string esc(const std::string& s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += ch;
    }
  }
  return out;
}

std::string tick_label(double v, double step) {
  if (std::abs(v) < step * 1e-9) v = 0.0;
  return fmt::format("{:.6g}", v);
}

std::pair<std::string, std::string> default_labels(PlotKind kind) {
  switch (kind) {
    case PlotKind::recovery: return {"time (s)", "deflection (deg)"};
    case PlotKind::overhead: return {"x (m)", "y (m)"};
    case PlotKind::error_time: return {"time (s)", "position error (m)"};
    case PlotKind::force_time: return {"time (s)", "force (N)"};
  }
  return {"x", "y"};
}

}  // namespace

std::string render_svg(const Plot& plot) {
  double xlo = INFINITY, xhi = -INFINITY, ylo = INFINITY, yhi = -INFINITY;
  size_t points = 0;
  for (const Series& s : plot.series) {
    require(s.x.size() == s.y.size(), "plot series '" + s.label + "': x and y differ in length");
    for (size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      xlo = std::min(xlo, s.x[i]);
      xhi = std::max(xhi, s.x[i]);
      ylo = std::min(ylo, s.y[i]);
      yhi = std::max(yhi, s.y[i]);
      ++points;
    }
  }
  require(points > 0, "plot '" + plot.title + "': empty series");
  const bool band = std::isfinite(plot.threshold);
  if (band) {
    ylo = std::min(ylo, plot.kind == PlotKind::recovery ? -plot.threshold : plot.threshold);
    yhi = std::max(yhi, plot.threshold);
  }

  const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
  if (plot.kind == PlotKind::overhead) {
    // Equal scale on both axes.
    const double cx = 0.5 * (xlo + xhi), cy = 0.5 * (ylo + yhi);
    const double per_px = std::max((xhi - xlo) / pw, (yhi - ylo) / ph) * 1.05;
    xlo = cx - 0.5 * pw * per_px;
    xhi = cx + 0.5 * pw * per_px;
    ylo = cy - 0.5 * ph * per_px;
    yhi = cy + 0.5 * ph * per_px;
  }
  const Range1 xr = plot.kind == PlotKind::overhead ? Range1{xlo, xhi} : padded(xlo, xhi);
  const Range1 yr = plot.kind == PlotKind::overhead ? Range1{ylo, yhi} : padded(ylo, yhi);
  const auto px = [&](double x) { return kLeft + (x - xr.lo) / (xr.hi - xr.lo) * pw; };
  const auto py = [&](double y) { return kTop + (yr.hi - y) / (yr.hi - yr.lo) * ph; };

  auto [xl, yl] = default_labels(plot.kind);
  if (!plot.x_label.empty()) xl = plot.x_label;
  if (!plot.y_label.empty()) yl = plot.y_label;

  std::string svg;
  svg += fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\" "
      "font-family=\"sans-serif\" font-size=\"12\">\n",
      kWidth, kHeight);
  svg += fmt::format("<rect width=\"{}\" height=\"{}\" fill=\"white\"/>\n", kWidth, kHeight);
  svg += fmt::format("<text x=\"{:.1f}\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">{}</text>\n",
                     kWidth / 2, esc(plot.title));

  // Grid and ticks.
  const double xs = nice_step(xr.hi - xr.lo), ys = nice_step(yr.hi - yr.lo);
  for (double v = std::ceil(xr.lo / xs - 1e-9) * xs; v <= xr.hi + xs * 1e-9; v += xs) {
    svg += fmt::format(
        "<line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{0:.2f}\" y2=\"{2:.2f}\" stroke=\"#e0e0e0\"/>\n"
        "<text x=\"{0:.2f}\" y=\"{3:.2f}\" text-anchor=\"middle\">{4}</text>\n",
        px(v), kTop, kTop + ph, kTop + ph + 16, tick_label(v, xs));
  }
  for (double v = std::ceil(yr.lo / ys - 1e-9) * ys; v <= yr.hi + ys * 1e-9; v += ys) {
    svg += fmt::format(
        "<line x1=\"{1:.2f}\" y1=\"{0:.2f}\" x2=\"{2:.2f}\" y2=\"{0:.2f}\" stroke=\"#e0e0e0\"/>\n"
        "<text x=\"{3:.2f}\" y=\"{4:.2f}\" text-anchor=\"end\">{5}</text>\n",
        py(v), kLeft, kLeft + pw, kLeft - 6, py(v) + 4, tick_label(v, ys));
  }
  svg += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n",
                     kLeft, kTop, pw, ph);
  svg += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\">{}</text>\n", kLeft + pw / 2,
                     kHeight - 14, esc(xl));
  svg += fmt::format(
      "<text x=\"16\" y=\"{0:.1f}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {0:.1f})\">{1}</text>\n",
      kTop + ph / 2, esc(yl));

  if (band) {
    std::vector<double> levels{plot.threshold};
    if (plot.kind == PlotKind::recovery && plot.threshold != 0.0) levels.push_back(-plot.threshold);
    for (double lv : levels) {
      svg += fmt::format(
          "<line x1=\"{:.2f}\" y1=\"{:.2f}\" x2=\"{:.2f}\" y2=\"{:.2f}\" stroke=\"#555555\" "
          "stroke-dasharray=\"6 4\"/>\n",
          kLeft, py(lv), kLeft + pw, py(lv));
    }
    svg += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"end\" fill=\"#555555\">threshold {}</text>\n",
                       kLeft + pw - 4, py(plot.threshold) - 4, tick_label(plot.threshold, 1.0));
  }

  int legend_row = 0;
  for (size_t k = 0; k < plot.series.size(); ++k) {
    const Series& s = plot.series[k];
    const char* color = kColors[k % std::size(kColors)];
    std::string pts;
    for (size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      if (!pts.empty()) pts += ' ';
      pts += fmt::format("{:.2f},{:.2f}", px(s.x[i]), py(s.y[i]));
    }
    if (pts.empty()) continue;
    svg += fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\"{} points=\"{}\"/>\n", color,
                       s.dashed ? " stroke-dasharray=\"5 3\"" : "", pts);
    if (!s.label.empty()) {
      const double ly = kTop + 14 + 16 * legend_row++;
      svg += fmt::format(
          "<line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{2:.2f}\" y2=\"{1:.2f}\" stroke=\"{3}\" stroke-width=\"2\"{4}/>\n"
          "<text x=\"{5:.2f}\" y=\"{6:.2f}\">{7}</text>\n",
          kLeft + pw - 150, ly, kLeft + pw - 126, color, s.dashed ? " stroke-dasharray=\"5 3\"" : "",
          kLeft + pw - 120, ly + 4, esc(s.label));
    }
  }
  svg += "</svg>\n";
  return svg;
}

void emit_plot(const std::filesystem::path& path, const Plot& plot) { write_text(path, render_svg(plot)); }

Plot recovery_plot(const RecoveryTrace& trace, double threshold) {
  Plot p;
  p.kind = PlotKind::recovery;
  p.title = fmt::format("{} recovery", to_string(trace.channel));
  p.series.push_back({std::string(to_string(trace.channel)), trace.timestamps, trace.values, false});
  p.threshold = threshold;
  if (trace.channel == Channel::axial) p.y_label = "compression (mm)";
  return p;
}

Plot overhead_plot(const RunResult& result) {
  Plot p;
  p.kind = PlotKind::overhead;
  p.title = to_string(result.kind) + " overhead";
  Series ref{"reference", {}, {}, true}, act{"flown", {}, {}, false};
  for (const Sample& s : result.samples) {
    ref.x.push_back(s.reference.x());
    ref.y.push_back(s.reference.y());
    act.x.push_back(s.position.x());
    act.y.push_back(s.position.y());
  }
  p.series = {ref, act};
  return p;
}

Plot error_plot(const RunResult& result) {
  Plot p;
  p.kind = PlotKind::error_time;
  p.title = to_string(result.kind) + " position error";
  Series e{"error", {}, {}, false};
  for (const Sample& s : result.samples) {
    e.x.push_back(s.t);
    e.y.push_back(s.error);
  }
  p.series = {e};
  return p;
}

Plot force_plot(const RunResult& result) {
  Plot p;
  p.kind = PlotKind::force_time;
  p.title = to_string(result.kind) + " contact force";
  Series f{"contact", {}, {}, false};
  for (const Sample& s : result.samples) {
    f.x.push_back(s.t);
    f.y.push_back(s.contact_force);
  }
  p.series = {f};
  return p;
}

// ---------------------------------------------------------------------------
// Manifest

std::string manifest_json(const ExperimentManifest& m) {
  nlohmann::ordered_json j;
  j["version"] = m.version;
  j["config_hash"] = m.config_hash;
  j["seed"] = m.seed;
  j["subcommand"] = m.subcommand;
  j["arguments"] = m.arguments;
  j["scenarios"] = m.scenarios;
  j["output_dir"] = m.output_dir;
  j["started"] = m.started;
  j["finished"] = m.finished;
  j["outputs"] = m.outputs;
  j["resolved_config"] = m.resolved_config;
  return j.dump(2) + "\n";
}

void write_manifest(const std::filesystem::path& dir, const ExperimentManifest& m, const std::string& file_name) {
  write_text(dir / file_name, manifest_json(m));
}

ExperimentManifest read_manifest(const std::filesystem::path& path) {
  const std::string text = read_all(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("manifest: ") + e.what(), 0);
  }
  ExperimentManifest m;
  try {
    m.version = j.at("version").get<std::string>();
    m.config_hash = j.at("config_hash").get<std::string>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.subcommand = j.at("subcommand").get<std::string>();
    m.arguments = j.value("arguments", std::vector<std::string>{});
    m.scenarios = j.value("scenarios", std::vector<std::string>{});
    m.output_dir = j.value("output_dir", std::string());
    m.started = j.value("started", std::string());
    m.finished = j.value("finished", std::string());
    m.outputs = j.value("outputs", std::vector<std::string>{});
    m.resolved_config = j.at("resolved_config").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("manifest: ") + e.what(), 0);
  }
  return m;
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  return fmt::format("{:04d}-{:02d}-{:02d}T{:02d}:{:02d}:{:02d}Z", tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday,
                     tm.tm_hour, tm.tm_min, tm.tm_sec);
}

}  // namespace holoarm
