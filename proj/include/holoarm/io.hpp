// CSV reading, SVG plots and run manifests.
#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include "holoarm/arm.hpp"
#include "holoarm/scenarios.hpp"

namespace holoarm {

inline constexpr const char* kVersion = "0.1.0";

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Index of a header column, ContractError if absent.
  int column(const std::string& name) const;
  std::vector<double> numbers(const std::string& name) const;  // ParseError on non-numeric cells
};

// Comma separated, first line is the header. Missing file: IoError.
// Ragged rows: ParseError with the line number.
CsvTable read_csv(const std::filesystem::path& path);
CsvTable parse_csv(const std::string& text);

enum class PlotKind { recovery, overhead, error_time, force_time };

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  bool dashed = false;
};

struct Plot {
  PlotKind kind = PlotKind::error_time;
  std::string title;
  std::vector<Series> series;
  double threshold = std::numeric_limits<double>::quiet_NaN();  // horizontal line, NaN for none
  std::string x_label;  // empty: from kind
  std::string y_label;
};

// Same plot, same bytes. ContractError when no series has points.
std::string render_svg(const Plot& plot);
void emit_plot(const std::filesystem::path& path, const Plot& plot);

Plot recovery_plot(const RecoveryTrace& trace, double threshold);
Plot overhead_plot(const RunResult& result);
Plot error_plot(const RunResult& result);
Plot force_plot(const RunResult& result);

struct ExperimentManifest {
  std::string version = kVersion;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string subcommand;
  std::vector<std::string> arguments;
  std::vector<std::string> scenarios;
  std::string output_dir;
  std::string started;
  std::string finished;
  std::string resolved_config;  // the key = value echo
  std::vector<std::string> outputs;
};

std::string manifest_json(const ExperimentManifest& manifest);
// Writes manifest.json (or `file_name`) into `dir`.
void write_manifest(const std::filesystem::path& dir, const ExperimentManifest& manifest,
                    const std::string& file_name = "manifest.json");
ExperimentManifest read_manifest(const std::filesystem::path& path);

std::string utc_timestamp();

// Write `text` to `path`, creating parent directories. IoError on failure.
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace holoarm
