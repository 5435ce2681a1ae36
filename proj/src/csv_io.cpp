#include "slr/csv_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "slr/design.hpp"

namespace slr {
namespace {

// RFC 4180: quote fields containing comma, quote, or newline; double quotes.
std::string quote_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  out += '"';
  return out;
}

std::vector<std::string> split_record(const std::string& line, long lineno) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c == '\r') {
      // tolerate CRLF
    } else {
      cur += c;
    }
  }
  if (quoted) throw ParseError("unterminated quoted field", lineno);
  fields.push_back(cur);
  return fields;
}

double parse_number(const std::string& s, long lineno) {
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    while (pos < s.size() && (s[pos] == ' ' || s[pos] == '\t')) ++pos;
    if (pos != s.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ParseError("non-numeric cell '" + s + "'", lineno);
  }
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void save_matrix_csv(const std::string& path, const Eigen::MatrixXd& m,
                     const std::vector<std::string>& colnames) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    if (j > 0) out << ',';
    if (!colnames.empty()) {
      if (colnames.size() != static_cast<std::size_t>(m.cols()))
        throw ContractViolation("save_matrix_csv: wrong number of column names");
      out << quote_field(colnames[static_cast<std::size_t>(j)]);
    } else {
      out << 'x' << (j + 1);
    }
  }
  out << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j > 0) out << ',';
      out << format_double(m(i, j));
    }
    out << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

void save_response_csv(const std::string& path, const Eigen::VectorXd& y) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << "y\n";
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (y(i) != 0.0 && y(i) != 1.0)
      throw ContractViolation("save_response_csv: response values must be 0/1");
    out << (y(i) == 1.0 ? "1" : "0") << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

Eigen::MatrixXd load_matrix_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open for reading: " + path);
  std::string line;
  long lineno = 0;

  if (!std::getline(in, line)) throw ParseError("empty file: " + path, 1);
  ++lineno;
  std::size_t ncols = split_record(line, lineno).size();
  if (ncols == 0) throw ParseError("empty header", lineno);

  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() && in.eof()) break;
    std::vector<std::string> fields = split_record(line, lineno);
    if (fields.size() != ncols)
      throw ParseError("ragged row: " + std::to_string(fields.size()) +
                           " fields, header has " + std::to_string(ncols),
                       lineno);
    std::vector<double> row(ncols);
    for (std::size_t j = 0; j < ncols; ++j) row[j] = parse_number(fields[j], lineno);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError("no data rows in " + path, lineno);

  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(ncols));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < ncols; ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return m;
}

std::pair<DesignMatrix, Eigen::VectorXd> load_csv_dataset(
    const std::string& features_path, const std::string& response_path,
    bool normalize) {
  Eigen::MatrixXd x = load_matrix_csv(features_path);

  std::ifstream in(response_path);
  if (!in) throw IoError("cannot open for reading: " + response_path);
  std::string line;
  long lineno = 0;
  if (!std::getline(in, line)) throw ParseError("empty file: " + response_path, 1);
  ++lineno;
  std::vector<double> yv;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() && in.eof()) break;
    std::vector<std::string> fields = split_record(line, lineno);
    if (fields.size() != 1)
      throw ParseError("response row must have a single column", lineno);
    double v = parse_number(fields[0], lineno);
    if (v != 0.0 && v != 1.0)
      throw ParseError("response value outside {0,1}: " + fields[0], lineno);
    yv.push_back(v);
  }

  if (static_cast<Eigen::Index>(yv.size()) != x.rows())
    throw ParseError("row count mismatch: features have " +
                     std::to_string(x.rows()) + " rows, response has " +
                     std::to_string(yv.size()));

  Eigen::VectorXd y = Eigen::Map<Eigen::VectorXd>(yv.data(),
                                                  static_cast<Eigen::Index>(yv.size()));
  if (normalize) {
    NormalizedDesign norm = unit_normalize_columns(DesignMatrix(std::move(x)));
    return {std::move(norm.x), std::move(y)};
  }
  return {DesignMatrix(std::move(x)), std::move(y)};
}

}  // namespace slr
