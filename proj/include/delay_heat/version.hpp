#pragma once

namespace delay_heat {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace delay_heat
