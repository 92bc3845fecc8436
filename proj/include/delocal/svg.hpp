#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace delocal {

struct PlotSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_x = false;
  bool log_y = false;
  bool connect = false;              // polyline instead of markers
  std::optional<double> vertical;    // marker line at this x
  std::string vertical_label;
};

inline PlotSpec labelled(std::string title, std::string x_label, std::string y_label) {
  PlotSpec spec;
  spec.title = std::move(title);
  spec.x_label = std::move(x_label);
  spec.y_label = std::move(y_label);
  return spec;
}

/// Minimal standalone SVG scatter or line plot. Non-finite points and, on log
/// axes, nonpositive coordinates are skipped.
std::string svg_plot(const std::vector<double>& x, const std::vector<double>& y, const PlotSpec& spec);

}  // namespace delocal
