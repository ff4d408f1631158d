#pragma once

#include <filesystem>

#include "dcgs/core.hpp"

namespace dcgs {

/// Writes P5 (1 channel) or P6 (3 channels), maxval 255. Values are clamped
/// to [0, 1] and rounded. Throws std::runtime_error on I/O failure.
void write_ppm(const std::filesystem::path &path, const Raster &image);

/// Reads binary P5/P6 with maxval up to 65535; values are scaled to [0, 1].
/// Throws std::runtime_error on malformed or unreadable input.
Raster read_ppm(const std::filesystem::path &path);

}  // namespace dcgs
