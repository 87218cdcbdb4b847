#pragma once

#include <string>
#include <vector>

#include "gesturelab/core/matrix.hpp"

namespace gesturelab::csv {

// One row per matrix row. Header is optional (empty list = no header).
void write_matrix(const std::string& path, const Matrix& m,
                  const std::vector<std::string>& header);

// Reads a numeric CSV; a non-numeric first line is treated as a header and
// skipped. Throws ParseError on ragged or non-numeric rows.
Matrix read_matrix(const std::string& path);

std::string format_row(std::span<const double> values);

} // namespace gesturelab::csv
