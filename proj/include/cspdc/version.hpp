#pragma once

namespace cspdc {

inline constexpr const char* kVersion = "0.1.0";

}
