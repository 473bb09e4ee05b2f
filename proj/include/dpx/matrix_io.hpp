#pragma once

#include <iosfwd>
#include <string>

#include "dpx/linalg.hpp"

namespace dpx {

// Plain text matrix format: a header line "<rows> <cols>" followed by one
// line of space-separated values per row.  Lines starting with '#' are
// comments and are skipped.  Throws IoError on malformed input.
Matrix read_matrix(std::istream& in);
Matrix read_matrix_file(const std::string& path);

void write_matrix(std::ostream& out, const Matrix& m);
void write_matrix_file(const std::string& path, const Matrix& m);

// Write a file atomically: contents go to a sibling temp file which is then
// renamed over the target, so readers never observe a partial file.
void atomic_write_file(const std::string& path, const std::string& contents);

}  // namespace dpx
