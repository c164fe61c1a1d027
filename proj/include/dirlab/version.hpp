#pragma once

namespace dirlab {

inline constexpr const char* kArtifactVersion = "0.1.0";

}  // namespace dirlab
