#pragma once

#include <string>
#include <vector>

namespace finsler_flow {

/// 17 significant digits ("%.17g"); round-trips every double.
std::string format_g17(double v);

/// Joins cells with ',' and terminates with '\n'.
std::string csv_row(const std::vector<double>& cells);
std::string csv_header(const std::vector<std::string>& names);

} // namespace finsler_flow
