#pragma once

namespace npquant {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace npquant
