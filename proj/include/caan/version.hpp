#pragma once

namespace caan {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace caan
