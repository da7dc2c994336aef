#pragma once

namespace oqs {
inline constexpr const char* version = "0.1.0";
}
