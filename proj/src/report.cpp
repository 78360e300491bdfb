#include "rcusum/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <sstream>

namespace rcusum {

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (v == 0.0) return std::signbit(v) ? "-0" : "0";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_csv(std::ostream& out, const std::vector<RunReport>& rows) {
  out << "scenario,procedure,d,gamma,b,epsilon_star,arl_mean,arl_se,wdd_mean,wdd_sd,censored_fraction,trials,seed\n";
  for (const RunReport& r : rows) {
    out << r.scenario << ',' << r.procedure << ',' << r.d << ',' << format_number(r.gamma) << ','
        << format_number(r.b) << ',' << format_number(r.epsilon_star) << ',' << format_number(r.arl.mean) << ','
        << format_number(r.arl.se) << ',' << format_number(r.wdd.mean) << ',' << format_number(r.wdd.sd) << ','
        << format_number(r.wdd.censored_fraction) << ',' << r.trials << ',' << r.seed << '\n';
  }
}

void write_aligned(std::ostream& out, const std::vector<std::string>& header,
                   const std::vector<std::vector<std::string>>& cells) {
  std::vector<std::size_t> width(header.size());
  for (std::size_t j = 0; j < header.size(); ++j) width[j] = header[j].size();
  for (const auto& row : cells) {
    for (std::size_t j = 0; j < row.size() && j < width.size(); ++j) width[j] = std::max(width[j], row[j].size());
  }
  auto line = [&](const std::vector<std::string>& row) {
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j == 0) {
        out << row[j] << std::string(width[j] - row[j].size(), ' ');
      } else {
        out << "  " << std::string(width[j] - row[j].size(), ' ') << row[j];
      }
    }
    out << '\n';
  };
  line(header);
  std::size_t total = 0;
  for (std::size_t j = 0; j < width.size(); ++j) total += width[j] + (j ? 2 : 0);
  out << std::string(total, '-') << '\n';
  for (const auto& row : cells) line(row);
}

namespace {

std::string fixed(double v, int digits) {
  if (std::isnan(v)) return "-";
  std::ostringstream s;
  s.setf(std::ios::fixed);
  s.precision(digits);
  s << v;
  return s.str();
}

}  // namespace

void write_human(std::ostream& out, const std::vector<RunReport>& rows) {
  std::vector<std::vector<std::string>> cells;
  for (const RunReport& r : rows) {
    cells.push_back({r.scenario, r.procedure, fixed(r.b, 3), fixed(r.epsilon_star, 6),
                     fixed(r.arl.mean, 1) + " (" + fixed(r.arl.se, 1) + ")",
                     fixed(r.wdd.mean, 2) + " (" + fixed(r.wdd.sd, 2) + ")", fixed(r.wdd.censored_fraction, 3),
                     fixed(r.efficiency_factor, 2)});
  }
  if (!rows.empty()) {
    out << "d = " << rows.front().d << ", gamma = " << format_number(rows.front().gamma) << ", delay runs = "
        << rows.front().trials << ", seed = " << rows.front().seed << "\n\n";
  }
  write_aligned(out, {"scenario", "procedure", "b", "epsilon*", "ARL (se)", "delay (sd)", "censored", "KL factor"},
                cells);
}

}  // namespace rcusum
