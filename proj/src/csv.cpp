#include "bdc/csv.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string_view>

namespace bdc::csv {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  size_t start = 0;
  while (true) {
    size_t pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

double parse_double(std::string_view field, const std::filesystem::path& path, size_t line_no) {
  double v = 0.0;
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size())
    throw ValidationError(path.string() + ":" + std::to_string(line_no) + ": cannot parse '" +
                          std::string(field) + "' as a number");
  return v;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open file: " + path.string());
  return in;
}

}  // namespace

Matrix read_matrix(const std::filesystem::path& path, const ReadOptions& opts) {
  std::ifstream in = open_input(path);
  std::vector<std::vector<double>> rows;
  std::string line;
  size_t line_no = 0;
  bool header_skipped = !opts.has_header;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    if (!header_skipped) {
      header_skipped = true;
      continue;
    }
    auto fields = split(line);
    std::vector<double> row;
    row.reserve(fields.size());
    for (auto f : fields) row.push_back(parse_double(f, path, line_no));
    if (!rows.empty() && row.size() != rows.front().size())
      throw ValidationError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                            std::to_string(rows.front().size()) + " fields, found " +
                            std::to_string(row.size()));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ValidationError(path.string() + ": no data rows");
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = rows[i][j];
  return m;
}

void write_matrix(const std::filesystem::path& path, const Matrix& m) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write file: " + path.string());
  char buf[32];
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), m(i, j));
      out.write(buf, ptr - buf);
    }
    out << '\n';
  }
}

void write_labels(const std::filesystem::path& path, const Labels& labels) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write file: " + path.string());
  out << "index,label\n";
  for (size_t i = 0; i < labels.size(); ++i) out << (i + 1) << ',' << (labels[i] + 1) << '\n';
}

std::vector<long> read_label_column(const std::filesystem::path& path) {
  std::ifstream in = open_input(path);
  std::vector<long> out;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto t = trim(line);
    if (t.empty()) continue;
    auto fields = split(t);
    std::string_view f = fields.back();
    long v = 0;
    auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
    if (ec != std::errc() || ptr != f.data() + f.size()) {
      if (out.empty() && line_no == 1) continue;  // header
      throw ValidationError(path.string() + ":" + std::to_string(line_no) +
                            ": cannot parse label '" + std::string(f) + "'");
    }
    out.push_back(v);
  }
  if (out.empty()) throw ValidationError(path.string() + ": no labels");
  return out;
}

}  // namespace bdc::csv
