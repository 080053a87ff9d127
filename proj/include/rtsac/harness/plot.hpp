#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "rtsac/harness/stats.hpp"

namespace rtsac::harness {

// Mean lines with shaded 95% bands, one series per table.
std::string render_curves_svg(std::span<const CurveTable> tables, const std::string& title);

struct Bar {
  std::string label;
  double value = 0.0;
};
struct BarGroup {
  std::string label;
  std::vector<Bar> bars;
};
// Grouped bars; bars sharing a label share a colour.
std::string render_bars_svg(std::span<const BarGroup> groups, const std::string& title, const std::string& y_label);

// Throws ErrorKind::Usage on empty input and ErrorKind::Io on write failure.
void emit_plot(std::span<const CurveTable> tables, const std::filesystem::path& path,
               const std::string& title = "Episodic return");
void emit_bars(std::span<const BarGroup> groups, const std::filesystem::path& path, const std::string& title,
               const std::string& y_label);

}  // namespace rtsac::harness
