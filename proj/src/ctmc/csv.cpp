#include "quasieq/ctmc/csv.hpp"

#include <charconv>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

#include "quasieq/error.hpp"

namespace quasieq::ctmc {

namespace {

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    cells.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
  }
  return cells;
}

std::size_t parse_index(const std::string& s, std::size_t line) {
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    fail(ErrorKind::kInvalidInput,
         "line " + std::to_string(line) + ": bad state index '" + s + "'");
  }
  return v;
}

double parse_real(const std::string& s, std::size_t line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    fail(ErrorKind::kInvalidInput, "line " + std::to_string(line) + ": bad number '" + s + "'");
  }
}

template <typename RowFn>
void read_rows(std::istream& in, const std::string& header, RowFn&& fn) {
  std::string line;
  std::size_t lineno = 0;
  bool seen_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = split_row(line);
    if (!seen_header) {
      std::string joined;
      for (std::size_t i = 0; i < cells.size(); ++i) joined += (i ? "," : "") + cells[i];
      if (joined != header) {
        fail(ErrorKind::kInvalidInput, "expected CSV header '" + header + "', got '" + line + "'");
      }
      seen_header = true;
      continue;
    }
    fn(cells, lineno);
  }
  if (!seen_header) fail(ErrorKind::kInvalidInput, "CSV is missing its header row");
}

}  // namespace

void write_generator_csv(std::ostream& out, const SparseGenerator& q) {
  out << "from,to,rate\n" << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (const Transition& t : q.transitions()) {
    out << t.from.id << ',' << t.to.id << ',' << t.rate << '\n';
  }
}

SparseGenerator read_generator_csv(std::istream& in, std::size_t n) {
  std::vector<Transition> entries;
  read_rows(in, "from,to,rate", [&](const std::vector<std::string>& cells, std::size_t line) {
    if (cells.size() != 3) {
      fail(ErrorKind::kInvalidInput, "line " + std::to_string(line) + ": expected 3 columns");
    }
    const Transition t{{parse_index(cells[0], line)}, {parse_index(cells[1], line)},
                       parse_real(cells[2], line)};
    n = std::max({n, t.from.id, t.to.id});
    entries.push_back(t);
  });
  return SparseGenerator(n, entries);
}

void write_distribution_csv(std::ostream& out, const ProbabilityVector& pv) {
  out << "state,prob\n" << std::setprecision(std::numeric_limits<double>::max_digits10);
  if (pv.cemetery() > 0.0) out << "0," << pv.cemetery() << '\n';
  for (std::size_t i = 0; i < pv.size(); ++i) out << i + 1 << ',' << pv.values()[i] << '\n';
}

ProbabilityVector read_distribution_csv(std::istream& in, std::size_t n) {
  std::vector<std::pair<std::size_t, double>> rows;
  read_rows(in, "state,prob", [&](const std::vector<std::string>& cells, std::size_t line) {
    if (cells.size() != 2) {
      fail(ErrorKind::kInvalidInput, "line " + std::to_string(line) + ": expected 2 columns");
    }
    rows.emplace_back(parse_index(cells[0], line), parse_real(cells[1], line));
    n = std::max(n, rows.back().first);
  });
  std::vector<double> v(n, 0.0);
  double cemetery = 0.0;
  for (const auto& [state, prob] : rows) {
    if (state == 0) {
      cemetery += prob;
    } else {
      v[state - 1] += prob;
    }
  }
  return ProbabilityVector(std::move(v), cemetery);
}

}  // namespace quasieq::ctmc
