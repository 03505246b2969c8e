#pragma once

namespace discern {

inline constexpr const char* kEngineVersion = "1.0.0";

}  // namespace discern
