#pragma once

#define QSYNTH_VERSION_MAJOR 0
#define QSYNTH_VERSION_MINOR 1
#define QSYNTH_VERSION_PATCH 0

namespace qsynth {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace qsynth
