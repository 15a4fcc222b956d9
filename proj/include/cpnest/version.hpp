#pragma once

#include <string_view>

namespace cpnest {

inline constexpr std::string_view kVersion = "cpnest 0.1.0";

}  // namespace cpnest
