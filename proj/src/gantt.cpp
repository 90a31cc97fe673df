#include "jssp/gantt.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

namespace jssp {

namespace {

constexpr double kLeft = 60.0;
constexpr double kTop = 20.0;
constexpr double kRowHeight = 28.0;
constexpr double kPlotWidth = 800.0;
constexpr double kBottom = 30.0;

const char* kPalette[] = {"#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f",
                          "#edc948", "#b07aa1", "#ff9da7", "#9c755f", "#bab0ac"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  std::string s(buf);
  while (s.back() == '0') s.pop_back();
  if (s.back() == '.') s.pop_back();
  return s;
}

std::string escape(const std::string& s) {
  std::string out;
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

std::string render_gantt_svg(const Schedule& sched, int num_machines) {
  int rows = num_machines;
  if (rows < 0) {
    rows = 0;
    for (const auto& o : sched.ops) rows = std::max(rows, o.machine + 1);
  }
  const Time horizon = std::max<Time>(sched.makespan(), 1);
  const double xs = kPlotWidth / static_cast<double>(horizon);
  const double height = kTop + rows * kRowHeight + kBottom;
  const double width = kLeft + kPlotWidth + 20.0;

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width) << "\" height=\"" << num(height)
      << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  if (!sched.instance_id.empty()) svg << "<title>" << escape(sched.instance_id) << "</title>\n";

  const double axis_y = kTop + rows * kRowHeight;
  svg << "<g class=\"axes\" stroke=\"#333\">\n";
  svg << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(kTop) << "\" x2=\"" << num(kLeft) << "\" y2=\""
      << num(axis_y) << "\"/>\n";
  svg << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(axis_y) << "\" x2=\"" << num(kLeft + kPlotWidth)
      << "\" y2=\"" << num(axis_y) << "\"/>\n";
  svg << "</g>\n";
  svg << "<text x=\"" << num(kLeft) << "\" y=\"" << num(axis_y + 16) << "\">0</text>\n";
  svg << "<text x=\"" << num(kLeft + kPlotWidth) << "\" y=\"" << num(axis_y + 16) << "\" text-anchor=\"end\">"
      << sched.makespan() << "</text>\n";
  for (int m = 0; m < rows; ++m)
    svg << "<text x=\"" << num(kLeft - 6) << "\" y=\"" << num(kTop + m * kRowHeight + kRowHeight * 0.65)
        << "\" text-anchor=\"end\">M" << m << "</text>\n";

  for (const auto& o : sched.ops) {
    const double x = kLeft + static_cast<double>(o.start) * xs;
    const double w = static_cast<double>(o.end - o.start) * xs;
    const double y = kTop + o.machine * kRowHeight + 2.0;
    svg << "<rect x=\"" << num(x) << "\" y=\"" << num(y) << "\" width=\"" << num(w) << "\" height=\""
        << num(kRowHeight - 4.0) << "\" fill=\"" << kPalette[o.op.job % 10] << "\" stroke=\"#222\""
        << " data-job=\"" << o.op.job << "\" data-pos=\"" << o.op.pos << "\" data-machine=\"" << o.machine
        << "\" data-start=\"" << o.start << "\" data-end=\"" << o.end << "\"/>\n";
    svg << "<text x=\"" << num(x + w / 2) << "\" y=\"" << num(y + kRowHeight * 0.55)
        << "\" text-anchor=\"middle\" fill=\"#fff\">" << o.op.job << '.' << o.op.pos << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace jssp
