#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace cvarsim {

struct RegretCurve {
  std::string label;
  std::vector<double> x;     // checkpoint episodes
  std::vector<double> mean;  // mean cumulative regret
  std::vector<double> std;   // stddev band half-width (may be empty)
};

struct PlotOptions {
  bool log_x = false;
  bool log_y = false;
  int width = 720;
  int height = 480;
  std::string title = "cumulative regret";
};

// Self-contained SVG with one mean polyline and a +-1 stddev band per
// curve. Axis ticks sit at the data extrema and midpoint and are labeled
// with %.6g. On log axes, values <= 0 are clamped to half the smallest
// positive value.
std::string render_regret_svg(const std::vector<RegretCurve>& curves,
                              const PlotOptions& options);

// Curve extracted from a results JSON document written by run_experiment.
RegretCurve curve_from_result_json(const nlohmann::json& doc);

}  // namespace cvarsim
