#pragma once

#include <zlib.h>

#include <cstdint>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "searchplan/grid.hpp"

namespace searchplan::io {

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>((v >> 24) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>(v & 0xff));
}

inline void put_chunk(std::string& out, const char* type, const std::string& data) {
  put_u32(out, static_cast<std::uint32_t>(data.size()));
  std::string body(type, 4);
  body += data;
  out += body;
  const auto crc = crc32(0L, reinterpret_cast<const Bytef*>(body.data()), static_cast<uInt>(body.size()));
  put_u32(out, static_cast<std::uint32_t>(crc));
}

}  // namespace detail

/// Encodes an 8-bit grayscale PNG.
inline std::string encode_png(const GrayImage& img) {
  if (img.width == 0 || img.height == 0) throw std::invalid_argument("empty image");
  std::string raw;
  raw.reserve((img.width + 1) * img.height);
  for (std::size_t y = 0; y < img.height; ++y) {
    raw.push_back('\0');  // filter: none
    raw.append(reinterpret_cast<const char*>(img.pixels.data() + y * img.width), img.width);
  }
  uLongf packed_size = compressBound(static_cast<uLong>(raw.size()));
  std::string packed(packed_size, '\0');
  if (compress2(reinterpret_cast<Bytef*>(packed.data()), &packed_size, reinterpret_cast<const Bytef*>(raw.data()),
                static_cast<uLong>(raw.size()), 9) != Z_OK)
    throw std::runtime_error("zlib compression failed");
  packed.resize(packed_size);

  std::string out("\x89PNG\r\n\x1a\n", 8);
  std::string ihdr;
  detail::put_u32(ihdr, static_cast<std::uint32_t>(img.width));
  detail::put_u32(ihdr, static_cast<std::uint32_t>(img.height));
  ihdr += std::string("\x08\x00\x00\x00\x00", 5);  // 8-bit depth, grayscale, deflate, no filter, no interlace
  detail::put_chunk(out, "IHDR", ihdr);
  detail::put_chunk(out, "IDAT", packed);
  detail::put_chunk(out, "IEND", {});
  return out;
}

/// Decodes PNGs produced by encode_png (8-bit grayscale, filter 0).
inline GrayImage decode_png(const std::string& data) {
  if (data.size() < 8 || data.compare(0, 8, std::string("\x89PNG\r\n\x1a\n", 8)) != 0)
    throw std::invalid_argument("not a PNG");
  auto u32 = [&](std::size_t at) {
    return (static_cast<std::uint32_t>(static_cast<unsigned char>(data[at])) << 24) |
           (static_cast<std::uint32_t>(static_cast<unsigned char>(data[at + 1])) << 16) |
           (static_cast<std::uint32_t>(static_cast<unsigned char>(data[at + 2])) << 8) |
           static_cast<std::uint32_t>(static_cast<unsigned char>(data[at + 3]));
  };
  GrayImage img;
  std::string idat;
  std::size_t pos = 8;
  while (pos + 8 <= data.size()) {
    const std::uint32_t len = u32(pos);
    const std::string type = data.substr(pos + 4, 4);
    const std::string body = data.substr(pos + 8, len);
    if (type == "IHDR") {
      img.width = u32(pos + 8);
      img.height = u32(pos + 12);
      if (body[8] != 8 || body[9] != 0) throw std::invalid_argument("only 8-bit grayscale PNG supported");
    } else if (type == "IDAT") {
      idat += body;
    }
    pos += 12 + len;
  }
  std::string raw((img.width + 1) * img.height, '\0');
  uLongf raw_size = static_cast<uLongf>(raw.size());
  if (uncompress(reinterpret_cast<Bytef*>(raw.data()), &raw_size, reinterpret_cast<const Bytef*>(idat.data()),
                 static_cast<uLong>(idat.size())) != Z_OK)
    throw std::invalid_argument("corrupt PNG data");
  img.pixels.resize(img.width * img.height);
  for (std::size_t y = 0; y < img.height; ++y) {
    if (raw[y * (img.width + 1)] != 0) throw std::invalid_argument("unsupported PNG filter");
    for (std::size_t x = 0; x < img.width; ++x)
      img.pixels[y * img.width + x] = static_cast<std::uint8_t>(raw[y * (img.width + 1) + 1 + x]);
  }
  return img;
}

}  // namespace searchplan::io
