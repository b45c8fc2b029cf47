#pragma once

namespace mgtn {

inline constexpr const char* kCodeVersion = "mgtn 0.1.0";

} // namespace mgtn
