#pragma once

namespace textrobust {

inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace textrobust
