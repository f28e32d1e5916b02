#pragma once

namespace outlab {

inline constexpr const char* library_name = "outlab";
inline constexpr const char* library_version = "0.1.0";

}
