#pragma once

namespace rigame {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace rigame
