#pragma once

#include <cstdio>
#include <string>

namespace fiberlab {

/// Round-trip text form of a double, identical across runs and platforms.
inline std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace fiberlab
