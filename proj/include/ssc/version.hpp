#pragma once

namespace ssc {

inline constexpr const char* kToolVersion = "0.3.0";

}  // namespace ssc
