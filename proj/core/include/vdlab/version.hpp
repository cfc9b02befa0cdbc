#pragma once

namespace vdlab {

inline constexpr const char* kVersionString = "0.1.0";

}  // namespace vdlab
