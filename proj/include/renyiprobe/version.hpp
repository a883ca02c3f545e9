#pragma once

namespace renyiprobe {

inline constexpr const char* version_string = "renyi-probe 0.1.0";

} // namespace renyiprobe
