#include "dpx/matrix_io.hpp"

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

namespace dpx {

namespace {

// Next content line, skipping blanks and '#' comments.  Returns false at EOF.
bool next_line(std::istream& in, std::string& line) {
  while (std::getline(in, line)) {
    size_t pos = line.find_first_not_of(" \t\r");
    if (pos == std::string::npos) continue;
    if (line[pos] == '#') continue;
    return true;
  }
  return false;
}

}  // namespace

Matrix read_matrix(std::istream& in) {
  std::string line;
  if (!next_line(in, line)) {
    throw IoError("matrix text: missing header line");
  }
  std::istringstream header(line);
  long rows = 0, cols = 0;
  if (!(header >> rows >> cols) || rows < 1 || cols < 1) {
    throw IoError("matrix text: bad header '" + line + "'");
  }
  std::string trailing;
  if (header >> trailing) {
    throw IoError("matrix text: trailing tokens in header '" + line + "'");
  }
  Matrix m(rows, cols);
  for (long i = 0; i < rows; ++i) {
    if (!next_line(in, line)) {
      throw IoError("matrix text: expected " + std::to_string(rows) +
                    " rows, got " + std::to_string(i));
    }
    std::istringstream row(line);
    for (long j = 0; j < cols; ++j) {
      if (!(row >> m(i, j))) {
        throw IoError("matrix text: row " + std::to_string(i) +
                      " has fewer than " + std::to_string(cols) + " values");
      }
    }
    if (row >> trailing) {
      throw IoError("matrix text: row " + std::to_string(i) +
                    " has more than " + std::to_string(cols) + " values");
    }
  }
  return m;
}

Matrix read_matrix_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open file: " + path);
  }
  return read_matrix(in);
}

void write_matrix(std::ostream& out, const Matrix& m) {
  out << m.rows() << " " << m.cols() << "\n";
  out << std::setprecision(17);
  for (long i = 0; i < m.rows(); ++i) {
    for (long j = 0; j < m.cols(); ++j) {
      if (j) out << " ";
      out << m(i, j);
    }
    out << "\n";
  }
}

void write_matrix_file(const std::string& path, const Matrix& m) {
  std::ostringstream buf;
  write_matrix(buf, m);
  atomic_write_file(path, buf.str());
}

void atomic_write_file(const std::string& path, const std::string& contents) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw IoError("cannot open file for writing: " + tmp);
    }
    out << contents;
    out.flush();
    if (!out) {
      throw IoError("write failed: " + tmp);
    }
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    std::remove(tmp.c_str());
    throw IoError("rename failed: " + tmp + " -> " + path);
  }
}

}  // namespace dpx
