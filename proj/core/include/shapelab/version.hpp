#pragma once

namespace shapelab {
inline constexpr const char* kVersion = "0.1.0";
}
