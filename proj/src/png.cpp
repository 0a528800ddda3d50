#include "scgan/png.hpp"

#include <zlib.h>

#include <cstring>
#include <fstream>

#include "scgan/errors.hpp"

namespace scgan {

namespace {

void put_be32(std::vector<uint8_t>& out, uint32_t v) {
  out.push_back(static_cast<uint8_t>(v >> 24));
  out.push_back(static_cast<uint8_t>(v >> 16));
  out.push_back(static_cast<uint8_t>(v >> 8));
  out.push_back(static_cast<uint8_t>(v));
}

void put_chunk(std::vector<uint8_t>& out, const char type[4],
               const std::vector<uint8_t>& data) {
  put_be32(out, static_cast<uint32_t>(data.size()));
  const size_t start = out.size();
  out.insert(out.end(), type, type + 4);
  out.insert(out.end(), data.begin(), data.end());
  const uint32_t crc = static_cast<uint32_t>(
      ::crc32(0, out.data() + start, static_cast<uInt>(out.size() - start)));
  put_be32(out, crc);
}

}  // namespace

void write_png(const std::string& path, const std::vector<uint8_t>& pixels,
               int width, int height, int channels) {
  require(width > 0 && height > 0, "png dimensions must be positive");
  require(channels == 1 || channels == 3, "png supports 1 or 3 channels");
  require(pixels.size() == static_cast<size_t>(width) * height * channels,
          "png pixel buffer size mismatch");

  // raw scanlines with filter byte 0
  std::vector<uint8_t> raw;
  raw.reserve(static_cast<size_t>(height) * (1 + static_cast<size_t>(width) * channels));
  for (int y = 0; y < height; ++y) {
    raw.push_back(0);
    const uint8_t* row = pixels.data() + static_cast<size_t>(y) * width * channels;
    raw.insert(raw.end(), row, row + static_cast<size_t>(width) * channels);
  }
  uLongf bound = ::compressBound(static_cast<uLong>(raw.size()));
  std::vector<uint8_t> deflated(bound);
  if (::compress2(deflated.data(), &bound, raw.data(),
                  static_cast<uLong>(raw.size()), 6) != Z_OK)
    throw NumericalError("png deflate failed");
  deflated.resize(bound);

  std::vector<uint8_t> out = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  std::vector<uint8_t> ihdr;
  put_be32(ihdr, static_cast<uint32_t>(width));
  put_be32(ihdr, static_cast<uint32_t>(height));
  ihdr.push_back(8);                                   // bit depth
  ihdr.push_back(channels == 1 ? 0 : 2);               // gray / truecolor
  ihdr.push_back(0);
  ihdr.push_back(0);
  ihdr.push_back(0);
  put_chunk(out, "IHDR", ihdr);
  put_chunk(out, "IDAT", deflated);
  put_chunk(out, "IEND", {});

  std::ofstream f(path, std::ios::binary);
  if (!f) throw InvalidArgument("cannot open PNG for writing: " + path);
  f.write(reinterpret_cast<const char*>(out.data()),
          static_cast<std::streamsize>(out.size()));
  if (!f) throw InvalidArgument("failed writing PNG: " + path);
}

}  // namespace scgan
