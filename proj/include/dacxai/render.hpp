#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dacxai/global_xai.hpp"
#include "dacxai/metrics.hpp"

namespace dacxai {

// Shortest round-trip decimal for CSV/JSON-ish output; NaN prints as "NA".
std::string fmt_num(double v);

std::string csv_escape(const std::string& field);

// RFC-4180: quoted fields where needed, CRLF row terminators.
void write_csv(const std::filesystem::path& path, std::span<const std::string> header,
               const std::vector<std::vector<std::string>>& rows);

// All SVG output is byte-deterministic: fixed canvas, fixed palette, fixed
// 3-decimal coordinates, no timestamps.
std::string svg_tradeoff(std::span<const TradeoffPoint> points);

// Cell fill scales with log10(count + 1).
std::string svg_confusion_heatmap(const ConfusionMatrix& m);

struct ScatterGroup {
  std::string label;
  std::vector<std::pair<double, double>> points;  // (PC1, PC2)
};

// Scatter in the PC1-PC2 plane with per-group colors, optional KDE contour
// overlay (marching squares at 5 evenly spaced levels), and keyword
// annotations placed along their eigenvector directions.
std::string svg_pc_scatter(std::span<const ScatterGroup> groups, const KdeGrid* kde,
                           std::span<const KeywordAnnotation> annotations);

}  // namespace dacxai
