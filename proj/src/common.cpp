#include "agidet/common.hpp"

#include <cstdio>
#include <cstdlib>

namespace agidet {

std::string fmt_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

double parse_double_strict(const std::string& s) {
    if (s.empty()) throw std::invalid_argument("empty numeric field");
    char* end = nullptr;
    double v = std::strtod(s.c_str(), &end);
    while (end && (*end == ' ' || *end == '\r' || *end == '\t')) ++end;
    if (!end || *end != '\0') throw std::invalid_argument("bad numeric field: '" + s + "'");
    return v;
}

}  // namespace agidet
