#pragma once

namespace supcert {

inline constexpr const char* kToolName = "supcert";
inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace supcert
