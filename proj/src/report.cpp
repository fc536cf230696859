#include <cctype>
#include <cstdio>
#include <ostream>
#include <string>

#include "stylever/eval.hpp"

namespace stylever {
namespace {

std::string title_case(std::string_view s) {
  std::string out(s);
  if (!out.empty()) out[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(out[0])));
  return out;
}

std::string pct_cell(const std::optional<int>& v) {
  return v ? std::to_string(*v) + "%" : "-";
}

std::string csv_cell(const std::optional<int>& v) { return v ? std::to_string(*v) : ""; }

}  // namespace

void write_performance_text(std::ostream& out, const PerformanceTable& table,
                            const std::string& title) {
  char line[160];
  out << title << "\n\n";
  std::snprintf(line, sizeof line, "%-16s%-14s%-14s%-14s\n", "Speaking style", "Males", "Females",
                "Average");
  out << line;
  std::snprintf(line, sizeof line, "%-16s%-7s%-7s%-7s%-7s%-7s%-7s\n", "", "H0", "H1", "H0", "H1",
                "H0", "H1");
  out << line;
  for (const auto& r : table.rounded()) {
    std::snprintf(line, sizeof line, "%-16s%-7s%-7s%-7s%-7s%-7s%-7s\n",
                  title_case(style_name(r.style)).c_str(), pct_cell(r.male_h0).c_str(),
                  pct_cell(r.male_h1).c_str(), pct_cell(r.female_h0).c_str(),
                  pct_cell(r.female_h1).c_str(), pct_cell(r.avg_h0).c_str(),
                  pct_cell(r.avg_h1).c_str());
    out << line;
  }
}

void write_performance_csv(std::ostream& out, const PerformanceTable& table) {
  out << "style,male_h0,male_h1,female_h0,female_h1,avg_h0,avg_h1\n";
  for (const auto& r : table.rounded())
    out << style_name(r.style) << ',' << csv_cell(r.male_h0) << ',' << csv_cell(r.male_h1) << ','
        << csv_cell(r.female_h0) << ',' << csv_cell(r.female_h1) << ',' << csv_cell(r.avg_h0)
        << ',' << csv_cell(r.avg_h1) << '\n';
}

void write_confusion_text(std::ostream& out, const ConfusionMatrix& cm, const std::string& title) {
  const Eigen::MatrixXi cells = cm.rounded();
  char buf[32];
  out << title << "\n\n";
  std::snprintf(buf, sizeof buf, "%-10s", "Model");
  out << buf;
  for (Style s : kModelStyles) {
    std::snprintf(buf, sizeof buf, "%-9s", title_case(style_name(s)).c_str());
    out << buf;
  }
  out << '\n';
  for (int m = 0; m < kNumModelStyles; ++m) {
    std::snprintf(buf, sizeof buf, "%-10s",
                  title_case(style_name(kModelStyles[static_cast<std::size_t>(m)])).c_str());
    out << buf;
    for (int t = 0; t < kNumModelStyles; ++t) {
      if (cm.column_total(t) == 0) {
        std::snprintf(buf, sizeof buf, "%-9s", "-");
      } else {
        std::snprintf(buf, sizeof buf, "%-9s", (std::to_string(cells(m, t)) + "%").c_str());
      }
      out << buf;
    }
    out << '\n';
  }
}

void write_confusion_csv(std::ostream& out, const ConfusionMatrix& cm) {
  const Eigen::MatrixXi cells = cm.rounded();
  out << "model";
  for (Style s : kModelStyles) out << ',' << style_name(s);
  out << '\n';
  for (int m = 0; m < kNumModelStyles; ++m) {
    out << style_name(kModelStyles[static_cast<std::size_t>(m)]);
    for (int t = 0; t < kNumModelStyles; ++t) {
      out << ',';
      if (cm.column_total(t) > 0) out << cells(m, t);
    }
    out << '\n';
  }
}

}  // namespace stylever
