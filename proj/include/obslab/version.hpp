#pragma once

namespace obslab {

inline constexpr const char* version_string = "obslab 0.1.0";

} // namespace obslab
