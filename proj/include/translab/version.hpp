#pragma once

namespace translab {
inline constexpr const char* kVersion = "0.1.0";
}
