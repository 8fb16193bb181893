#pragma once

namespace lotscale {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace lotscale
