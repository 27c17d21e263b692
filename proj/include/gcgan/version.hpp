#pragma once

namespace gcgan {

inline constexpr const char* kVersion = "0.1.0";

/// Version tag written into checkpoint containers. Bump on any layout change.
inline constexpr unsigned kCheckpointFormatVersion = 1;

}  // namespace gcgan
