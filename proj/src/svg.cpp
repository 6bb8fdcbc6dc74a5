#include "cvarsim/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "cvarsim/errors.hpp"

namespace cvarsim {

namespace {

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b"};

std::string fmt(double v, const char* spec = "%.3f") {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

std::string tick_label(double v) { return fmt(v, "%.6g"); }

}  // namespace

RegretCurve curve_from_result_json(const nlohmann::json& doc) {
  RegretCurve curve;
  curve.label = doc.value("learner", std::string("series"));
  for (const auto& cp : doc.at("checkpoints")) curve.x.push_back(cp.get<double>());
  const auto& agg = doc.at("aggregate");
  for (const auto& m : agg.at("mean_cum")) curve.mean.push_back(m.get<double>());
  if (agg.contains("std_cum")) {
    for (const auto& s : agg.at("std_cum")) curve.std.push_back(s.get<double>());
  }
  if (curve.x.empty() || curve.x.size() != curve.mean.size()) {
    throw ConfigError("results document has no plottable series");
  }
  return curve;
}

std::string render_regret_svg(const std::vector<RegretCurve>& curves,
                              const PlotOptions& options) {
  if (curves.empty()) throw ArgumentError("nothing to plot");
  for (const RegretCurve& c : curves) {
    if (c.x.empty() || c.x.size() != c.mean.size()) {
      throw ArgumentError("curve series lengths do not match");
    }
  }

  // Data extent in raw coordinates.
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  double min_pos_x = xmin, min_pos_y = xmin;
  for (const RegretCurve& c : curves) {
    for (std::size_t i = 0; i < c.x.size(); ++i) {
      const double sd = i < c.std.size() ? c.std[i] : 0.0;
      xmin = std::min(xmin, c.x[i]);
      xmax = std::max(xmax, c.x[i]);
      ymin = std::min(ymin, c.mean[i] - sd);
      ymax = std::max(ymax, c.mean[i] + sd);
      if (c.x[i] > 0.0) min_pos_x = std::min(min_pos_x, c.x[i]);
      if (c.mean[i] - sd > 0.0) min_pos_y = std::min(min_pos_y, c.mean[i] - sd);
      if (!std::isfinite(c.x[i]) || !std::isfinite(c.mean[i]) || !std::isfinite(sd)) {
        throw InvariantError("non-finite plot input");
      }
    }
  }
  if (options.log_x && !std::isfinite(min_pos_x)) {
    throw ArgumentError("log x axis needs positive x values");
  }
  if (options.log_y && !std::isfinite(min_pos_y)) min_pos_y = 1.0;

  auto tx = [&](double x) {
    if (!options.log_x) return x;
    return std::log10(std::max(x, min_pos_x / 2.0));
  };
  auto ty = [&](double y) {
    if (!options.log_y) return y;
    return std::log10(std::max(y, min_pos_y / 2.0));
  };

  double txmin = tx(xmin), txmax = tx(xmax);
  double tymin = ty(ymin), tymax = ty(ymax);
  if (txmax - txmin < 1e-12) txmax = txmin + 1.0;
  if (tymax - tymin < 1e-12) tymax = tymin + 1.0;

  const double ml = 72, mr = 24, mt = 36, mb = 48;
  const double pw = options.width - ml - mr;
  const double ph = options.height - mt - mb;
  auto px = [&](double x) { return ml + (tx(x) - txmin) / (txmax - txmin) * pw; };
  auto py = [&](double y) { return mt + ph - (ty(y) - tymin) / (tymax - tymin) * ph; };

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
         std::to_string(options.width) + "\" height=\"" +
         std::to_string(options.height) + "\" viewBox=\"0 0 " +
         std::to_string(options.width) + " " + std::to_string(options.height) +
         "\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg += "<text x=\"" + fmt(ml) + "\" y=\"" + fmt(mt - 12) +
         "\" font-family=\"monospace\" font-size=\"14\">" + options.title +
         "</text>\n";
  // axes
  svg += "<line x1=\"" + fmt(ml) + "\" y1=\"" + fmt(mt + ph) + "\" x2=\"" +
         fmt(ml + pw) + "\" y2=\"" + fmt(mt + ph) +
         "\" stroke=\"black\" stroke-width=\"1\"/>\n";
  svg += "<line x1=\"" + fmt(ml) + "\" y1=\"" + fmt(mt) + "\" x2=\"" + fmt(ml) +
         "\" y2=\"" + fmt(mt + ph) + "\" stroke=\"black\" stroke-width=\"1\"/>\n";

  // Ticks at the extrema and the midpoint of the (possibly log) range.
  const double xmid = options.log_x ? std::pow(10.0, (txmin + txmax) / 2.0)
                                    : (xmin + xmax) / 2.0;
  const double ymid = options.log_y ? std::pow(10.0, (tymin + tymax) / 2.0)
                                    : (ymin + ymax) / 2.0;
  for (double xv : {xmin, xmid, xmax}) {
    svg += "<line x1=\"" + fmt(px(xv)) + "\" y1=\"" + fmt(mt + ph) + "\" x2=\"" +
           fmt(px(xv)) + "\" y2=\"" + fmt(mt + ph + 5) + "\" stroke=\"black\"/>\n";
    svg += "<text class=\"tick-x\" x=\"" + fmt(px(xv)) + "\" y=\"" +
           fmt(mt + ph + 20) +
           "\" text-anchor=\"middle\" font-family=\"monospace\" font-size=\"11\">" +
           tick_label(xv) + "</text>\n";
  }
  for (double yv : {ymin, ymid, ymax}) {
    svg += "<line x1=\"" + fmt(ml - 5) + "\" y1=\"" + fmt(py(yv)) + "\" x2=\"" +
           fmt(ml) + "\" y2=\"" + fmt(py(yv)) + "\" stroke=\"black\"/>\n";
    svg += "<text class=\"tick-y\" x=\"" + fmt(ml - 8) + "\" y=\"" +
           fmt(py(yv) + 4) +
           "\" text-anchor=\"end\" font-family=\"monospace\" font-size=\"11\">" +
           tick_label(yv) + "</text>\n";
  }

  for (std::size_t ci = 0; ci < curves.size(); ++ci) {
    const RegretCurve& c = curves[ci];
    const char* color = kPalette[ci % (sizeof(kPalette) / sizeof(kPalette[0]))];
    if (!c.std.empty()) {
      std::string band = "<polygon class=\"band\" fill=\"" + std::string(color) +
                         "\" fill-opacity=\"0.15\" stroke=\"none\" points=\"";
      for (std::size_t i = 0; i < c.x.size(); ++i) {
        band += fmt(px(c.x[i])) + "," + fmt(py(c.mean[i] + c.std[i])) + " ";
      }
      for (std::size_t i = c.x.size(); i-- > 0;) {
        band += fmt(px(c.x[i])) + "," + fmt(py(c.mean[i] - c.std[i])) + " ";
      }
      band += "\"/>\n";
      svg += band;
    }
    std::string line = "<polyline class=\"mean\" fill=\"none\" stroke=\"" +
                       std::string(color) + "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < c.x.size(); ++i) {
      line += fmt(px(c.x[i])) + "," + fmt(py(c.mean[i])) + " ";
    }
    line += "\"/>\n";
    svg += line;
    // legend entry
    const double ly = mt + 16 + 16 * static_cast<double>(ci);
    svg += "<line x1=\"" + fmt(ml + pw - 130) + "\" y1=\"" + fmt(ly - 4) +
           "\" x2=\"" + fmt(ml + pw - 110) + "\" y2=\"" + fmt(ly - 4) +
           "\" stroke=\"" + color + "\" stroke-width=\"2\"/>\n";
    svg += "<text class=\"legend\" x=\"" + fmt(ml + pw - 104) + "\" y=\"" + fmt(ly) +
           "\" font-family=\"monospace\" font-size=\"11\">" + c.label + "</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace cvarsim
