#include "l1ac/svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace l1ac::svg {

namespace {
const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};
}

void plot_columns(const sim::Trace& tr, const std::vector<Series>& series,
                  const std::string& title, const std::string& path) {
  const double W = 840, H = 420, ml = 64, mr = 16, mt = 36, mb = 40;
  double t0 = 0, t1 = 1, lo = std::numeric_limits<double>::infinity(), hi = -lo;
  if (!tr.rows.empty()) {
    t0 = tr.rows.front()[0];
    t1 = std::max(tr.rows.back()[0], t0 + 1e-9);
  }
  std::vector<std::size_t> cols;
  for (const auto& s : series) cols.push_back(tr.col(s.column));
  for (const auto& row : tr.rows)
    for (std::size_t c : cols) {
      lo = std::min(lo, row[c]);
      hi = std::max(hi, row[c]);
    }
  if (!(lo < hi)) {
    lo -= 1.0;
    hi += 1.0;
  }
  const double pad = 0.05 * (hi - lo);
  lo -= pad;
  hi += pad;

  auto X = [&](double t) { return ml + (t - t0) / (t1 - t0) * (W - ml - mr); };
  auto Y = [&](double v) { return H - mb - (v - lo) / (hi - lo) * (H - mt - mb); };

  std::ostringstream os;
  os << "<svg xmlns='http://www.w3.org/2000/svg' width='" << W << "' height='" << H
     << "' viewBox='0 0 " << W << " " << H << "'>\n"
     << "<rect width='100%' height='100%' fill='white'/>\n"
     << "<text x='" << W / 2 << "' y='20' text-anchor='middle' font-size='14'>"
     << title << "</text>\n";
  // axes
  os << "<line x1='" << ml << "' y1='" << H - mb << "' x2='" << W - mr << "' y2='"
     << H - mb << "' stroke='black'/>\n<line x1='" << ml << "' y1='" << mt
     << "' x2='" << ml << "' y2='" << H - mb << "' stroke='black'/>\n";
  for (int k = 0; k <= 5; ++k) {
    const double t = t0 + (t1 - t0) * k / 5, v = lo + (hi - lo) * k / 5;
    os << "<text x='" << X(t) << "' y='" << H - mb + 16
       << "' text-anchor='middle' font-size='10'>" << t << "</text>\n"
       << "<text x='" << ml - 6 << "' y='" << Y(v) + 3
       << "' text-anchor='end' font-size='10'>" << v << "</text>\n";
  }
  for (std::size_t s = 0; s < series.size(); ++s) {
    os << "<polyline fill='none' stroke='" << kColors[s % 5] << "' stroke-width='1.2' points='";
    int decim = std::max<int>(1, static_cast<int>(tr.rows.size() / 2000));
    for (std::size_t i = 0; i < tr.rows.size(); i += decim)
      os << X(tr.rows[i][0]) << "," << Y(tr.rows[i][cols[s]]) << " ";
    os << "'/>\n<text x='" << W - mr - 120 << "' y='" << mt + 14 * (s + 1)
       << "' font-size='11' fill='" << kColors[s % 5] << "'>" << series[s].label
       << "</text>\n";
  }
  os << "</svg>\n";

  std::ofstream f(path);
  f << os.str();
}

}  // namespace l1ac::svg
