// Batch command driver plus the CSV and SVG emitters it uses.
#pragma once

#include <string>
#include <vector>

#include "relax/config.hpp"

namespace relax {

struct RunOptions {
  std::string out_dir;  // overrides [output] dir when non-empty
  unsigned threads = 0;
};

extern const std::vector<std::string> kCommands;

// Executes one batch command (geometry, prc-singular, prc-numeric,
// prc-infinitesimal, sweep, isochrones, plot) and writes its artifacts.
// Throws relax::Error subclasses on failure.
void run(const RunConfig& cfg, const std::string& command, const RunOptions& opts = {});

// 15-significant-digit number formatting used in every data file.
std::string format_number(double v);

// RFC-4180-style CSV writing (LF line endings, header row first).
class CsvWriter {
 public:
  explicit CsvWriter(const std::string& path);
  ~CsvWriter();
  CsvWriter(const CsvWriter&) = delete;
  CsvWriter& operator=(const CsvWriter&) = delete;
  void row(const std::vector<std::string>& fields);

 private:
  struct Impl;
  Impl* impl_;
};

struct PlotSeries {
  enum class Style { Line, Dots, DashedLine };
  std::string label;
  Style style = Style::Line;
  std::vector<std::pair<double, double>> points;
};

void write_svg_plot(const std::string& path, const std::string& title,
                    const std::string& x_label, const std::string& y_label,
                    const std::vector<PlotSeries>& series);

}  // namespace relax
