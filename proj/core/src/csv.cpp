#include "odtr/csv.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "odtr/errors.hpp"

namespace odtr {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    // trim surrounding whitespace and a trailing CR
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

[[noreturn]] void fail(std::size_t row, std::size_t col, const std::string& msg) {
  throw DataError("dataset csv: row " + std::to_string(row) + ", column " +
                  std::to_string(col + 1) + ": " + msg);
}

double parse_real(const std::string& s, std::size_t row, std::size_t col) {
  if (s.empty()) fail(row, col, "missing value");
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    fail(row, col, "not a number: '" + s + "'");
  }
  if (used != s.size()) fail(row, col, "trailing characters in '" + s + "'");
  return v;
}

int parse_treatment(const std::string& s, std::size_t row, std::size_t col) {
  const double v = parse_real(s, row, col);
  if (v == 1.0) return 1;
  if (v == -1.0) return -1;
  fail(row, col, "treatment must be +1 or -1, got '" + s + "'");
}

int parse_label(const std::string& s, std::size_t row, std::size_t col) {
  const double v = parse_real(s, row, col);
  const int k = static_cast<int>(std::lround(v));
  if (static_cast<double>(k) != v) fail(row, col, "y2 must be an integer, got '" + s + "'");
  return k;
}

}  // namespace

IngestReport parse_dataset_csv(const std::string& text) {
  std::stringstream ss(text);
  std::string line;
  if (!std::getline(ss, line)) throw DataError("dataset csv: empty input");
  const std::vector<std::string> header = split_line(line);

  // header layout: x1_* block, a1, x2_* block, a2, y2
  std::size_t i = 0;
  std::vector<std::string> x1_names, x2_names;
  while (i < header.size() && header[i].rfind("x1_", 0) == 0) {
    x1_names.push_back(header[i].substr(3));
    ++i;
  }
  if (x1_names.empty()) throw DataError("dataset csv: header must start with x1_<name> columns");
  if (i >= header.size() || header[i] != "a1") {
    throw DataError("dataset csv: expected column 'a1' after the x1_ block");
  }
  ++i;
  while (i < header.size() && header[i].rfind("x2_", 0) == 0) {
    x2_names.push_back(header[i].substr(3));
    ++i;
  }
  if (x2_names.empty()) throw DataError("dataset csv: expected x2_<name> columns after 'a1'");
  if (i >= header.size() || header[i] != "a2") {
    throw DataError("dataset csv: expected column 'a2' after the x2_ block");
  }
  ++i;
  if (i >= header.size() || header[i] != "y2") {
    throw DataError("dataset csv: expected column 'y2' after 'a2'");
  }
  ++i;
  if (i != header.size()) {
    throw DataError("dataset csv: unexpected trailing column '" + header[i] + "'");
  }
  const std::size_t ncol = header.size();
  const std::size_t p1 = x1_names.size(), p2 = x2_names.size();

  IngestReport rep;
  rep.data.x1_names = x1_names;
  rep.data.x2_names = x2_names;
  std::vector<int> raw_labels;
  std::size_t row = 1;
  while (std::getline(ss, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    const std::vector<std::string> cells = split_line(line);
    if (cells.size() != ncol) {
      throw DataError("dataset csv: row " + std::to_string(row) + ": expected " +
                      std::to_string(ncol) + " columns, got " + std::to_string(cells.size()));
    }
    Trajectory t;
    std::size_t c = 0;
    t.x1.resize(p1);
    for (std::size_t j = 0; j < p1; ++j, ++c) t.x1[j] = parse_real(cells[c], row, c);
    t.a1 = parse_treatment(cells[c], row, c);
    ++c;
    t.x2.resize(p2);
    for (std::size_t j = 0; j < p2; ++j, ++c) t.x2[j] = parse_real(cells[c], row, c);
    t.a2 = parse_treatment(cells[c], row, c);
    ++c;
    raw_labels.push_back(parse_label(cells[c], row, c));
    t.y2 = 0;  // assigned after the remap pass
    rep.data.trajectories.push_back(std::move(t));
  }
  if (rep.data.trajectories.empty()) throw DataError("dataset csv: no data rows");

  std::vector<int> uniq = raw_labels;
  std::sort(uniq.begin(), uniq.end());
  uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
  if (uniq.size() < 2) throw DataError("dataset csv: y2 takes a single value; need at least 2 categories");
  std::map<int, int> to_rank;
  for (std::size_t k = 0; k < uniq.size(); ++k) to_rank[uniq[k]] = static_cast<int>(k) + 1;
  rep.label_map = uniq;
  rep.relabeled = !(uniq.front() == 1 && uniq.back() == static_cast<int>(uniq.size()));
  for (std::size_t j = 0; j < raw_labels.size(); ++j) {
    rep.data.trajectories[j].y2 = to_rank[raw_labels[j]];
  }
  rep.data.n_categories = static_cast<int>(uniq.size());
  rep.data.validate();
  return rep;
}

IngestReport load_dataset_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open dataset file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_dataset_csv(buf.str());
}

std::string dataset_to_csv(const TwoStageDataset& data) {
  std::ostringstream os;
  for (const std::string& n : data.x1_names) os << "x1_" << n << ',';
  os << "a1,";
  for (const std::string& n : data.x2_names) os << "x2_" << n << ',';
  os << "a2,y2\n";
  char buf[40];
  for (const Trajectory& t : data.trajectories) {
    for (double v : t.x1) {
      std::snprintf(buf, sizeof(buf), "%.17g", v);
      os << buf << ',';
    }
    os << t.a1 << ',';
    for (double v : t.x2) {
      std::snprintf(buf, sizeof(buf), "%.17g", v);
      os << buf << ',';
    }
    os << t.a2 << ',' << t.y2 << '\n';
  }
  return os.str();
}

}  // namespace odtr
