#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace obslab {

inline constexpr double pi = 3.14159265358979323846264338327950288;

inline void require(bool condition, const std::string& message) {
    if (!condition) throw std::invalid_argument(message);
}

inline void guard(bool condition, const std::string& message) {
    if (!condition) throw std::runtime_error(message);
}

} // namespace obslab
