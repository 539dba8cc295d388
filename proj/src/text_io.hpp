#pragma once

// Internal helpers for the line-oriented file formats. Reals are written at
// 17 significant digits so text round trips are lossless.

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <sstream>
#include <string>
#include <vector>

#include "htrail/dataset.hpp"

namespace htrail::detail {

inline std::string fmt_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline double parse_real(const std::string& tok, int line) {
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (tok.empty() || end != tok.c_str() + tok.size() || errno == ERANGE) {
        throw data::malformed_record(line, "bad numeric field '" + tok + "'");
    }
    return v;
}

inline std::vector<std::string> split_ws(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream iss(line);
    std::string tok;
    while (iss >> tok) out.push_back(tok);
    return out;
}

// header tokens look like key=value
inline std::string header_value(const std::vector<std::string>& tokens, const std::string& key) {
    const std::string prefix = key + "=";
    for (const auto& t : tokens) {
        if (t.rfind(prefix, 0) == 0) return t.substr(prefix.size());
    }
    throw data::missing_field("header is missing '" + key + "'");
}

}  // namespace htrail::detail
