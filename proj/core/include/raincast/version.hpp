#pragma once

namespace raincast {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace raincast
