#pragma once

#include <cstdio>
#include <string>

namespace kgda {

inline void warn(const std::string& msg) {
    std::fprintf(stderr, "warning: %s\n", msg.c_str());
}

}  // namespace kgda
