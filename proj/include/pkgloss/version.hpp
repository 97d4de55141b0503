#pragma once

namespace pkgloss {
inline constexpr const char* version = "0.1.0";
}
