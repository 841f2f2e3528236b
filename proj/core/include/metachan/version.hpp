#pragma once

namespace metachan {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace metachan
