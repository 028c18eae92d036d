#pragma once

namespace mbfusion {
inline constexpr const char* kVersion = "0.1.0";
}
