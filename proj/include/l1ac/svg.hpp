#pragma once

#include <string>
#include <vector>

#include "l1ac/trace.hpp"

namespace l1ac::svg {

struct Series {
  std::string label;
  std::string column;
};

/// Minimal line chart of trace columns against time, written as a standalone
/// SVG file. Post-hoc visualization only.
void plot_columns(const sim::Trace& tr, const std::vector<Series>& series,
                  const std::string& title, const std::string& path);

}  // namespace l1ac::svg
