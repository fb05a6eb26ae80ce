#include "dacxai/render.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace dacxai {

namespace {

std::string fmt3(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

struct Frame {
  // World-to-screen mapping for a fixed 640x480 canvas with margins.
  double x0, x1, y0, y1;
  static constexpr double width = 640.0, height = 480.0, margin = 56.0;

  double sx(double x) const {
    return margin + (x - x0) / (x1 - x0) * (width - 2 * margin);
  }
  double sy(double y) const {
    return height - margin - (y - y0) / (y1 - y0) * (height - 2 * margin);
  }
};

Frame frame_of(double x0, double x1, double y0, double y1) {
  auto pad = [](double& lo, double& hi) {
    if (hi - lo <= 0.0) {
      const double c = lo;
      lo = c - 1.0;
      hi = c + 1.0;
    }
  };
  pad(x0, x1);
  pad(y0, y1);
  return Frame{x0, x1, y0, y1};
}

const char* kPalette[8] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                           "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

void svg_open(std::string& s) {
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"640\" "
       "height=\"480\" viewBox=\"0 0 640 480\">\n";
  s += "<rect x=\"0\" y=\"0\" width=\"640\" height=\"480\" fill=\"#ffffff\"/>\n";
}

void svg_axes(std::string& s, const Frame& f, const std::string& xlabel,
              const std::string& ylabel) {
  s += "<line x1=\"" + fmt3(f.sx(f.x0)) + "\" y1=\"" + fmt3(f.sy(f.y0)) + "\" x2=\"" +
       fmt3(f.sx(f.x1)) + "\" y2=\"" + fmt3(f.sy(f.y0)) +
       "\" stroke=\"#000000\" stroke-width=\"1\"/>\n";
  s += "<line x1=\"" + fmt3(f.sx(f.x0)) + "\" y1=\"" + fmt3(f.sy(f.y0)) + "\" x2=\"" +
       fmt3(f.sx(f.x0)) + "\" y2=\"" + fmt3(f.sy(f.y1)) +
       "\" stroke=\"#000000\" stroke-width=\"1\"/>\n";
  s += "<text x=\"320\" y=\"472\" font-family=\"monospace\" font-size=\"13\" "
       "text-anchor=\"middle\">" + xlabel + "</text>\n";
  s += "<text x=\"14\" y=\"240\" font-family=\"monospace\" font-size=\"13\" "
       "text-anchor=\"middle\" transform=\"rotate(-90 14 240)\">" + ylabel + "</text>\n";
}

void svg_tick_x(std::string& s, const Frame& f, double x, const std::string& label) {
  const double px = f.sx(x), py = f.sy(f.y0);
  s += "<line x1=\"" + fmt3(px) + "\" y1=\"" + fmt3(py) + "\" x2=\"" + fmt3(px) + "\" y2=\"" +
       fmt3(py + 4) + "\" stroke=\"#000000\" stroke-width=\"1\"/>\n";
  s += "<text x=\"" + fmt3(px) + "\" y=\"" + fmt3(py + 18) +
       "\" font-family=\"monospace\" font-size=\"11\" text-anchor=\"middle\">" + label +
       "</text>\n";
}

void svg_tick_y(std::string& s, const Frame& f, double y, const std::string& label) {
  const double px = f.sx(f.x0), py = f.sy(y);
  s += "<line x1=\"" + fmt3(px - 4) + "\" y1=\"" + fmt3(py) + "\" x2=\"" + fmt3(px) + "\" y2=\"" +
       fmt3(py) + "\" stroke=\"#000000\" stroke-width=\"1\"/>\n";
  s += "<text x=\"" + fmt3(px - 7) + "\" y=\"" + fmt3(py + 4) +
       "\" font-family=\"monospace\" font-size=\"11\" text-anchor=\"end\">" + label +
       "</text>\n";
}

std::string xml_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string fmt_num(double v) {
  if (std::isnan(v)) return "NA";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string csv_escape(const std::string& field) {
  const bool quote = field.find_first_of(",\"\r\n") != std::string::npos;
  if (!quote) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  out += "\"";
  return out;
}

void write_csv(const std::filesystem::path& path, std::span<const std::string> header,
               const std::vector<std::vector<std::string>>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  auto emit_row = [&](std::span<const std::string> row) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << ',';
      out << csv_escape(row[i]);
    }
    out << "\r\n";
  };
  emit_row(header);
  for (const auto& row : rows) emit_row(row);
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::string svg_tradeoff(std::span<const TradeoffPoint> points) {
  std::string s;
  svg_open(s);
  double x0 = 1.0, x1 = 0.0;
  for (const auto& p : points) {
    x0 = std::min(x0, p.target);
    x1 = std::max(x1, p.target);
  }
  if (points.empty()) {
    x0 = 0.8;
    x1 = 0.97;
  }
  Frame f = frame_of(x0, x1, 0.0, 1.0);
  svg_axes(s, f, "target accuracy", "abstention");
  for (int i = 0; i <= 5; ++i) {
    const double y = i / 5.0;
    svg_tick_y(s, f, y, fmt3(y).substr(0, 4));
  }
  for (const auto& p : points) svg_tick_x(s, f, p.target, fmt3(p.target).substr(0, 5));

  std::string path;
  for (std::size_t i = 0; i < points.size(); ++i) {
    path += (i == 0 ? "M" : " L");
    path += fmt3(f.sx(points[i].target)) + " " + fmt3(f.sy(points[i].abstention));
  }
  if (!path.empty()) {
    s += "<path d=\"" + path + "\" fill=\"none\" stroke=\"" + kPalette[0] +
         "\" stroke-width=\"2\"/>\n";
  }
  for (const auto& p : points) {
    s += "<circle cx=\"" + fmt3(f.sx(p.target)) + "\" cy=\"" + fmt3(f.sy(p.abstention)) +
         "\" r=\"4\" fill=\"" + kPalette[0] + "\"/>\n";
    s += "<circle cx=\"" + fmt3(f.sx(p.target)) + "\" cy=\"" +
         fmt3(f.sy(std::isnan(p.retained_accuracy) ? 0.0 : p.retained_accuracy)) +
         "\" r=\"3\" fill=\"" + kPalette[1] + "\"/>\n";
  }
  s += "<text x=\"584\" y=\"24\" font-family=\"monospace\" font-size=\"12\" text-anchor=\"end\" "
       "fill=\"" + std::string(kPalette[0]) + "\">abstention</text>\n";
  s += "<text x=\"584\" y=\"40\" font-family=\"monospace\" font-size=\"12\" text-anchor=\"end\" "
       "fill=\"" + std::string(kPalette[1]) + "\">retained accuracy</text>\n";
  s += "</svg>\n";
  return s;
}

std::string svg_confusion_heatmap(const ConfusionMatrix& m) {
  std::string s;
  svg_open(s);
  const std::size_t rows = m.row_labels.size();
  const std::size_t cols = m.col_labels.size();
  if (rows == 0 || cols == 0) {
    s += "</svg>\n";
    return s;
  }
  double max_count = 0.0;
  for (double c : m.counts.data) max_count = std::max(max_count, c);
  const double log_max = std::log10(max_count + 1.0);

  const double left = 120.0, top = 70.0;
  const double cw = std::min(64.0, (640.0 - left - 24.0) / static_cast<double>(cols));
  const double ch = std::min(44.0, (480.0 - top - 24.0) / static_cast<double>(rows));
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      const double c = m.counts(i, j);
      const double t = log_max > 0.0 ? std::log10(c + 1.0) / log_max : 0.0;
      // White -> deep blue.
      const int r = static_cast<int>(std::lround(255.0 - t * (255.0 - 31.0)));
      const int g = static_cast<int>(std::lround(255.0 - t * (255.0 - 119.0)));
      const int b = static_cast<int>(std::lround(255.0 - t * (255.0 - 180.0)));
      char color[8];
      std::snprintf(color, sizeof(color), "#%02x%02x%02x", r, g, b);
      const double x = left + static_cast<double>(j) * cw;
      const double y = top + static_cast<double>(i) * ch;
      s += "<rect x=\"" + fmt3(x) + "\" y=\"" + fmt3(y) + "\" width=\"" + fmt3(cw) +
           "\" height=\"" + fmt3(ch) + "\" fill=\"" + color +
           "\" stroke=\"#cccccc\" stroke-width=\"0.5\"/>\n";
      const char* text_color = t > 0.55 ? "#ffffff" : "#000000";
      s += "<text x=\"" + fmt3(x + cw / 2) + "\" y=\"" + fmt3(y + ch / 2 + 4) +
           "\" font-family=\"monospace\" font-size=\"11\" text-anchor=\"middle\" fill=\"" +
           text_color + "\">" + fmt_num(m.counts(i, j)) + "</text>\n";
    }
  }
  for (std::size_t i = 0; i < rows; ++i) {
    s += "<text x=\"" + fmt3(left - 6) + "\" y=\"" +
         fmt3(top + static_cast<double>(i) * ch + ch / 2 + 4) +
         "\" font-family=\"monospace\" font-size=\"11\" text-anchor=\"end\">" +
         xml_escape(m.row_labels[i]) + "</text>\n";
  }
  for (std::size_t j = 0; j < cols; ++j) {
    const double x = left + static_cast<double>(j) * cw + cw / 2;
    s += "<text x=\"" + fmt3(x) + "\" y=\"" + fmt3(top - 8) +
         "\" font-family=\"monospace\" font-size=\"11\" text-anchor=\"middle\" "
         "transform=\"rotate(-30 " + fmt3(x) + " " + fmt3(top - 8) + ")\">" +
         xml_escape(m.col_labels[j]) + "</text>\n";
  }
  s += "<text x=\"16\" y=\"24\" font-family=\"monospace\" font-size=\"12\">truth rows / "
       "prediction columns, fill ~ log10(count+1)</text>\n";
  s += "</svg>\n";
  return s;
}

namespace {

// Marching squares: append the level-crossing segments of one grid cell.
void cell_segments(std::string& path, const Frame& f, double level, double x0, double x1,
                   double y0, double y1, double v00, double v10, double v01, double v11) {
  // Corner order: 00=(x0,y0) 10=(x1,y0) 11=(x1,y1) 01=(x0,y1).
  struct Pt { double x, y; };
  Pt pts[4];
  int n = 0;
  auto edge = [&](double xa, double ya, double va, double xb, double yb, double vb) {
    const bool above_a = va >= level, above_b = vb >= level;
    if (above_a == above_b) return;
    const double t = (level - va) / (vb - va);
    pts[n++] = {xa + t * (xb - xa), ya + t * (yb - ya)};
  };
  edge(x0, y0, v00, x1, y0, v10);
  edge(x1, y0, v10, x1, y1, v11);
  edge(x1, y1, v11, x0, y1, v01);
  edge(x0, y1, v01, x0, y0, v00);
  for (int i = 0; i + 1 < n; i += 2) {
    path += "M" + fmt3(f.sx(pts[i].x)) + " " + fmt3(f.sy(pts[i].y)) + " L" +
            fmt3(f.sx(pts[i + 1].x)) + " " + fmt3(f.sy(pts[i + 1].y)) + " ";
  }
}

}  // namespace

std::string svg_pc_scatter(std::span<const ScatterGroup> groups, const KdeGrid* kde,
                           std::span<const KeywordAnnotation> annotations) {
  std::string s;
  svg_open(s);
  double x0 = 0.0, x1 = 0.0, y0 = 0.0, y1 = 0.0;
  bool any = false;
  for (const auto& g : groups) {
    for (const auto& [x, y] : g.points) {
      if (!any) {
        x0 = x1 = x;
        y0 = y1 = y;
        any = true;
      }
      x0 = std::min(x0, x);
      x1 = std::max(x1, x);
      y0 = std::min(y0, y);
      y1 = std::max(y1, y);
    }
  }
  if (!any) {
    x0 = y0 = -1.0;
    x1 = y1 = 1.0;
  } else {
    const double mx = 0.08 * (x1 - x0 + 1e-12), my = 0.08 * (y1 - y0 + 1e-12);
    x0 -= mx;
    x1 += mx;
    y0 -= my;
    y1 += my;
  }
  Frame f = frame_of(x0, x1, y0, y1);
  svg_axes(s, f, "PC1", "PC2");

  if (kde != nullptr && !kde->values.data.empty()) {
    double vmax = 0.0;
    for (double v : kde->values.data) vmax = std::max(vmax, v);
    const std::size_t ny = kde->values.shape[0], nx = kde->values.shape[1];
    for (int l = 1; l <= 5; ++l) {
      const double level = vmax * static_cast<double>(l) / 6.0;
      std::string path;
      for (std::size_t iy = 0; iy + 1 < ny; ++iy) {
        for (std::size_t ix = 0; ix + 1 < nx; ++ix) {
          cell_segments(path, f, level, kde->xs[ix], kde->xs[ix + 1], kde->ys[iy],
                        kde->ys[iy + 1], kde->values(iy, ix), kde->values(iy, ix + 1),
                        kde->values(iy + 1, ix), kde->values(iy + 1, ix + 1));
        }
      }
      if (!path.empty()) {
        s += "<path d=\"" + path + "\" fill=\"none\" stroke=\"#999999\" stroke-width=\"0.8\"/>\n";
      }
    }
  }

  for (std::size_t g = 0; g < groups.size(); ++g) {
    const char* color = kPalette[g % 8];
    for (const auto& [x, y] : groups[g].points) {
      s += "<circle cx=\"" + fmt3(f.sx(x)) + "\" cy=\"" + fmt3(f.sy(y)) +
           "\" r=\"2.5\" fill=\"" + color + "\" fill-opacity=\"0.7\"/>\n";
    }
    s += "<text x=\"584\" y=\"" + fmt3(24.0 + 16.0 * static_cast<double>(g)) +
         "\" font-family=\"monospace\" font-size=\"12\" text-anchor=\"end\" fill=\"" + color +
         "\">" + xml_escape(groups[g].label) + "</text>\n";
  }

  // Keywords drawn along their loading directions, scaled into the data frame.
  double max_load = 0.0;
  for (const auto& a : annotations) {
    max_load = std::max({max_load, std::abs(a.pc1), std::abs(a.pc2)});
  }
  if (max_load > 0.0) {
    const double sx = 0.45 * std::max(std::abs(x0), std::abs(x1)) / max_load;
    const double sy = 0.45 * std::max(std::abs(y0), std::abs(y1)) / max_load;
    for (const auto& a : annotations) {
      const double px = f.sx(a.pc1 * sx), py = f.sy(a.pc2 * sy);
      s += "<text x=\"" + fmt3(px) + "\" y=\"" + fmt3(py) +
           "\" font-family=\"monospace\" font-size=\"12\" font-weight=\"bold\" "
           "text-anchor=\"middle\" fill=\"#333333\">" + xml_escape(a.word) + "</text>\n";
    }
  }
  s += "</svg>\n";
  return s;
}

}  // namespace dacxai
