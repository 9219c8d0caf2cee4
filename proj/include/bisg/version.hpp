#pragma once

namespace bisg {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace bisg
