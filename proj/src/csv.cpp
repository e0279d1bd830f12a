#include "finsler_flow/csv.hpp"

#include <cstdio>

namespace finsler_flow {

std::string format_g17(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string csv_row(const std::vector<double>& cells)
{
    std::string out;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i)
            out += ',';
        out += format_g17(cells[i]);
    }
    out += '\n';
    return out;
}

std::string csv_header(const std::vector<std::string>& names)
{
    std::string out;
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (i)
            out += ',';
        out += names[i];
    }
    out += '\n';
    return out;
}

} // namespace finsler_flow
