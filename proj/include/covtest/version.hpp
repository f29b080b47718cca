#pragma once

namespace covtest {

inline constexpr const char* kVersion = "covtest 0.1.0";

}  // namespace covtest
