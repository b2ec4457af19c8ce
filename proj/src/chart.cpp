#include "blab/chart.hpp"

#include "blab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace blab {
namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 400.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 20.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 55.0;

std::string fixed(double value, int digits = 2) {
  char buffer[64];
  std::snprintf(buffer, sizeof buffer, "%.*f", digits, value);
  return buffer;
}

std::string escape(const std::string& text) {
  std::string out;
  for (char c : text) {
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

// 1, 2 or 5 times a power of ten, giving about `target` intervals.
double nice_step(double span, int target) {
  const double raw = span / target;
  const double magnitude = std::pow(10.0, std::floor(std::log10(raw)));
  for (double m : {1.0, 2.0, 5.0})
    if (m * magnitude >= raw) return m * magnitude;
  return 10.0 * magnitude;
}

}  // namespace

std::string render_distance_chart(const std::vector<IterationRecord>& records, const std::string& title) {
  if (records.empty()) throw InvalidArgument("chart needs at least one record");
  for (std::size_t i = 1; i < records.size(); ++i)
    if (records[i].iteration <= records[i - 1].iteration) throw InvalidArgument("record iterations must increase");

  const double x_min = records.front().iteration;
  const double x_max = std::max(x_min + 1.0, static_cast<double>(records.back().iteration));
  double y_max = 0.0;
  for (const auto& r : records) y_max = std::max(y_max, r.mean_nn_distance);
  if (!(y_max > 0.0) || !std::isfinite(y_max)) y_max = 1.0;
  const double y_step = nice_step(y_max, 5);
  y_max = std::ceil(y_max / y_step) * y_step;

  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  auto px = [&](double x) { return kLeft + (x - x_min) / (x_max - x_min) * plot_w; };
  auto py = [&](double y) { return kTop + plot_h - y / y_max * plot_h; };

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fixed(kWidth, 0) + "\" height=\"" + fixed(kHeight, 0) +
         "\" viewBox=\"0 0 " + fixed(kWidth, 0) + " " + fixed(kHeight, 0) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!title.empty())
    svg += "<text x=\"" + fixed(kWidth / 2) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" + escape(title) +
           "</text>\n";

  const double x_step = std::max(1.0, nice_step(x_max - x_min, 10));
  for (double x = std::ceil(x_min / x_step) * x_step; x <= x_max + 1e-9; x += x_step) {
    svg += "<line x1=\"" + fixed(px(x)) + "\" y1=\"" + fixed(kTop) + "\" x2=\"" + fixed(px(x)) + "\" y2=\"" +
           fixed(kTop + plot_h) + "\" stroke=\"#e0e0e0\"/>\n";
    svg += "<text x=\"" + fixed(px(x)) + "\" y=\"" + fixed(kTop + plot_h + 18) + "\" text-anchor=\"middle\">" +
           fixed(x, 0) + "</text>\n";
  }
  const int y_digits = y_step >= 1.0 ? 0 : static_cast<int>(std::ceil(-std::log10(y_step)));
  for (double y = 0.0; y <= y_max + y_step * 1e-9; y += y_step) {
    svg += "<line x1=\"" + fixed(kLeft) + "\" y1=\"" + fixed(py(y)) + "\" x2=\"" + fixed(kLeft + plot_w) + "\" y2=\"" +
           fixed(py(y)) + "\" stroke=\"#e0e0e0\"/>\n";
    svg += "<text x=\"" + fixed(kLeft - 8) + "\" y=\"" + fixed(py(y) + 4) + "\" text-anchor=\"end\">" +
           fixed(y, y_digits) + "</text>\n";
  }
  svg += "<rect x=\"" + fixed(kLeft) + "\" y=\"" + fixed(kTop) + "\" width=\"" + fixed(plot_w) + "\" height=\"" +
         fixed(plot_h) + "\" fill=\"none\" stroke=\"black\"/>\n";
  svg += "<text x=\"" + fixed(kLeft + plot_w / 2) + "\" y=\"" + fixed(kHeight - 12) +
         "\" text-anchor=\"middle\">iteration</text>\n";
  svg += "<text x=\"18\" y=\"" + fixed(kTop + plot_h / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 18 " +
         fixed(kTop + plot_h / 2) + ")\">mean distance</text>\n";

  svg += "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"2\" points=\"";
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (i) svg += ' ';
    svg += fixed(px(records[i].iteration)) + "," + fixed(py(records[i].mean_nn_distance));
  }
  svg += "\"/>\n";
  for (const auto& r : records)
    svg += "<circle class=\"point\" cx=\"" + fixed(px(r.iteration)) + "\" cy=\"" + fixed(py(r.mean_nn_distance)) +
           "\" r=\"4\" fill=\"#1f77b4\"/>\n";
  svg += "</svg>\n";
  return svg;
}

}  // namespace blab
