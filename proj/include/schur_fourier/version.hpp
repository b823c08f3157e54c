#pragma once

namespace sf {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace sf
