#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace scgan {

// Minimal deterministic PNG encoder (8-bit grayscale or RGB) built on zlib.
// Fixed compression settings, so identical pixels yield identical bytes.
void write_png(const std::string& path, const std::vector<uint8_t>& pixels,
               int width, int height, int channels);

}  // namespace scgan
