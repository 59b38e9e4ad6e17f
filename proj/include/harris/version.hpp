#pragma once

#include <string_view>

namespace harris {

inline constexpr std::string_view kVersion = "harris 0.1.0";

}  // namespace harris
