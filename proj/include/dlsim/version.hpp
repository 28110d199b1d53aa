#pragma once

namespace dlsim {

inline constexpr const char* kVersion = "1.0.0";

}  // namespace dlsim
