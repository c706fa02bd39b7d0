#pragma once

namespace kfp {
inline constexpr const char* kVersion = "0.1.0";
}
