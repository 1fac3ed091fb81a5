#pragma once

namespace episcale {

inline constexpr const char* kToolName = "episcale";
inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace episcale
