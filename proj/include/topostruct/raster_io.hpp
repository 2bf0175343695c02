#pragma once

// Readers and writers for the on-disk formats:
//   * PGM, plain (P2) and binary (P5), maxval up to 65535 (16-bit samples
//     are big-endian as PGM requires);
//   * raw float: one JSON header line {"w":W,"h":H} followed by W*H
//     little-endian IEEE-754 float32 samples, row-major;
//   * CSV persistence diagrams ("birth,death") and skeletons ("x,y,branch_id").

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "topostruct/diagram.hpp"
#include "topostruct/error.hpp"
#include "topostruct/grid.hpp"

namespace topostruct {

namespace fs = std::filesystem;

struct FieldLoad {
  ScalarField2D field;
  std::size_t clamped = 0;  // raw-float samples outside [0,1] or NaN
};

struct SkeletonPoint {
  std::size_t x = 0;
  std::size_t y = 0;
  int branch_id = 0;
};

/// Shortest round-trip text for a double with 17 significant digits;
/// infinities print as "inf".
inline std::string format_real(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

namespace detail {

inline std::string read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoFailure, "cannot open " + path.string());
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline void write_bytes(const fs::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::IoFailure, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(Errc::IoFailure, "short write to " + path.string());
}

inline std::string at_offset(std::size_t off) { return " at byte offset " + std::to_string(off); }

inline bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f'; }

struct PgmHeader {
  bool plain = false;
  std::size_t width = 0, height = 0;
  std::uint32_t maxval = 0;
  std::size_t payload = 0;  // offset of first sample byte (P5) or char (P2)
};

// Skips whitespace and '#' comments, then parses one unsigned decimal token.
inline std::uint64_t pgm_token(std::string_view bytes, std::size_t& pos) {
  for (;;) {
    while (pos < bytes.size() && is_space(bytes[pos])) ++pos;
    if (pos < bytes.size() && bytes[pos] == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      continue;
    }
    break;
  }
  if (pos >= bytes.size()) throw Error(Errc::MalformedHeader, "unexpected end of header" + at_offset(pos));
  std::uint64_t value = 0;
  auto [ptr, ec] = std::from_chars(bytes.data() + pos, bytes.data() + bytes.size(), value);
  if (ec != std::errc{} || ptr == bytes.data() + pos)
    throw Error(Errc::MalformedHeader, "expected unsigned integer" + at_offset(pos));
  pos = static_cast<std::size_t>(ptr - bytes.data());
  return value;
}

inline PgmHeader parse_pgm_header(std::string_view bytes) {
  PgmHeader h;
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '2' && bytes[1] != '5'))
    throw Error(Errc::MalformedHeader, "missing P2/P5 magic" + at_offset(0));
  h.plain = bytes[1] == '2';
  std::size_t pos = 2;
  const std::size_t wpos = pos;
  const auto w = pgm_token(bytes, pos);
  const auto hh = pgm_token(bytes, pos);
  if (w == 0 || hh == 0) throw Error(Errc::MalformedHeader, "zero image dimension" + at_offset(wpos));
  const std::size_t mpos = pos;
  const auto maxval = pgm_token(bytes, pos);
  if (maxval == 0 || maxval > 65535)
    throw Error(Errc::UnsupportedDepth, "maxval " + std::to_string(maxval) + at_offset(mpos));
  if (pos >= bytes.size() || !is_space(bytes[pos]))
    throw Error(Errc::MalformedHeader, "missing whitespace after maxval" + at_offset(pos));
  h.width = static_cast<std::size_t>(w);
  h.height = static_cast<std::size_t>(hh);
  h.maxval = static_cast<std::uint32_t>(maxval);
  h.payload = pos + 1;
  return h;
}

// Raw integer samples of a PGM, with their byte offsets for error reporting.
inline std::vector<std::uint32_t> read_pgm_samples(std::string_view bytes, const PgmHeader& h,
                                                   std::vector<std::size_t>* offsets = nullptr) {
  const std::size_t n = h.width * h.height;
  std::vector<std::uint32_t> samples(n);
  if (offsets) offsets->resize(n);
  if (h.plain) {
    std::size_t pos = h.payload;
    for (std::size_t i = 0; i < n; ++i) {
      while (pos < bytes.size() && is_space(bytes[pos])) ++pos;
      if (pos >= bytes.size())
        throw Error(Errc::TruncatedPayload,
                    "expected " + std::to_string(n) + " samples, got " + std::to_string(i) + at_offset(pos));
      if (offsets) (*offsets)[i] = pos;
      const auto v = pgm_token(bytes, pos);
      if (v > h.maxval) throw Error(Errc::MalformedHeader, "sample exceeds maxval" + at_offset(pos));
      samples[i] = static_cast<std::uint32_t>(v);
    }
    return samples;
  }
  const std::size_t bps = h.maxval < 256 ? 1 : 2;
  const std::size_t need = h.payload + n * bps;
  if (bytes.size() < need)
    throw Error(Errc::TruncatedPayload, "payload needs " + std::to_string(n * bps) + " bytes, file ends" +
                                            at_offset(bytes.size()));
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t off = h.payload + i * bps;
    if (offsets) (*offsets)[i] = off;
    const auto b0 = static_cast<std::uint8_t>(bytes[off]);
    std::uint32_t v = b0;
    if (bps == 2) v = (v << 8) | static_cast<std::uint8_t>(bytes[off + 1]);
    if (v > h.maxval) throw Error(Errc::MalformedHeader, "sample exceeds maxval" + at_offset(off));
    samples[i] = v;
  }
  return samples;
}

inline std::string pgm_bytes(std::size_t w, std::size_t h, std::uint32_t maxval,
                             std::span<const std::uint32_t> samples) {
  std::string out = "P5\n" + std::to_string(w) + " " + std::to_string(h) + "\n" + std::to_string(maxval) + "\n";
  const bool wide = maxval > 255;
  out.reserve(out.size() + samples.size() * (wide ? 2 : 1));
  for (auto v : samples) {
    if (wide) out.push_back(static_cast<char>((v >> 8) & 0xff));
    out.push_back(static_cast<char>(v & 0xff));
  }
  return out;
}

inline FieldLoad parse_raw_float(std::string_view bytes) {
  const auto nl = bytes.find('\n');
  if (nl == std::string_view::npos) throw Error(Errc::MalformedHeader, "raw-float header line not terminated" + at_offset(bytes.size()));
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(0, nl));
  } catch (const nlohmann::json::exception&) {
    throw Error(Errc::MalformedHeader, "raw-float header is not JSON" + at_offset(0));
  }
  if (!header.is_object() || !header.contains("w") || !header.contains("h") ||
      !header["w"].is_number_unsigned() || !header["h"].is_number_unsigned())
    throw Error(Errc::MalformedHeader, "raw-float header needs unsigned \"w\" and \"h\"" + at_offset(0));
  const auto w = header["w"].get<std::size_t>();
  const auto h = header["h"].get<std::size_t>();
  if (w == 0 || h == 0) throw Error(Errc::MalformedHeader, "zero image dimension" + at_offset(0));
  const std::size_t payload = nl + 1;
  const std::size_t need = payload + w * h * 4;
  if (bytes.size() < need)
    throw Error(Errc::TruncatedPayload, "payload needs " + std::to_string(w * h * 4) + " bytes, file ends" +
                                            at_offset(bytes.size()));
  FieldLoad out{ScalarField2D(w, h, 0.0), 0};
  for (std::size_t i = 0; i < w * h; ++i) {
    const std::size_t off = payload + 4 * i;
    std::uint32_t bits = 0;
    for (int b = 3; b >= 0; --b) bits = (bits << 8) | static_cast<std::uint8_t>(bytes[off + b]);
    double v = std::bit_cast<float>(bits);
    if (std::isnan(v)) {
      v = 0.0;
      ++out.clamped;
    } else if (v < 0.0 || v > 1.0) {
      v = std::clamp(v, 0.0, 1.0);
      ++out.clamped;
    }
    out.field[i] = v;
  }
  return out;
}

}  // namespace detail

/// Serialized raw-float bytes (header line + float32 payload).
inline std::string encode_raw_float(const ScalarField2D& field) {
  std::string out = "{\"w\":" + std::to_string(field.width()) + ",\"h\":" + std::to_string(field.height()) + "}\n";
  out.reserve(out.size() + field.size() * 4);
  for (double v : field.values()) {
    const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
    for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((bits >> (8 * b)) & 0xff));
  }
  return out;
}

inline FieldLoad decode_field(std::string_view bytes) {
  if (!bytes.empty() && bytes[0] == '{') return detail::parse_raw_float(bytes);
  const auto header = detail::parse_pgm_header(bytes);
  const auto samples = detail::read_pgm_samples(bytes, header);
  FieldLoad out{ScalarField2D(header.width, header.height, 0.0), 0};
  const double maxval = header.maxval;
  for (std::size_t i = 0; i < samples.size(); ++i) out.field[i] = samples[i] / maxval;
  return out;
}

/// Loads a likelihood map from PGM or raw-float; values end up in [0, 1].
inline FieldLoad load_field(const fs::path& path) { return decode_field(detail::read_bytes(path)); }

inline void save_field_raw(const ScalarField2D& field, const fs::path& path) {
  detail::write_bytes(path, encode_raw_float(field));
}

/// Quantizes to round(v * maxval) with maxval 255 (bit_depth 8) or 65535 (16).
inline void save_field_pgm(const ScalarField2D& field, const fs::path& path, int bit_depth = 8) {
  if (bit_depth != 8 && bit_depth != 16) throw Error(Errc::UnsupportedDepth, "bit depth " + std::to_string(bit_depth));
  const std::uint32_t maxval = bit_depth == 8 ? 255u : 65535u;
  std::vector<std::uint32_t> samples(field.size());
  for (std::size_t i = 0; i < field.size(); ++i)
    samples[i] = static_cast<std::uint32_t>(std::lround(std::clamp(field[i], 0.0, 1.0) * maxval));
  detail::write_bytes(path, detail::pgm_bytes(field.width(), field.height(), maxval, samples));
}

inline BinaryMask2D decode_mask(std::string_view bytes) {
  const auto header = detail::parse_pgm_header(bytes);
  std::vector<std::size_t> offsets;
  const auto samples = detail::read_pgm_samples(bytes, header, &offsets);
  BinaryMask2D mask(header.width, header.height, 0);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i] != 0 && samples[i] != header.maxval)
      throw Error(Errc::MalformedMask, "pixel value " + std::to_string(samples[i]) + " is neither 0 nor maxval" +
                                           detail::at_offset(offsets[i]));
    mask[i] = samples[i] != 0;
  }
  return mask;
}

inline std::string encode_mask(const BinaryMask2D& mask) {
  std::vector<std::uint32_t> samples(mask.size());
  for (std::size_t i = 0; i < mask.size(); ++i) samples[i] = mask[i] ? 255u : 0u;
  return detail::pgm_bytes(mask.width(), mask.height(), 255, samples);
}

/// Masks are stored as 8-bit P5 with 0 / 255 samples.
inline void save_mask(const BinaryMask2D& mask, const fs::path& path) {
  detail::write_bytes(path, encode_mask(mask));
}

inline BinaryMask2D load_mask(const fs::path& path) { return decode_mask(detail::read_bytes(path)); }

inline void export_diagram(const PersistenceDiagram& pd, const fs::path& path) {
  std::string out = "birth,death\n";
  for (const auto& p : pd) {
    if (!(p.death >= p.birth)) throw Error(Errc::InvalidParams, "diagram pair with death < birth");
    out += format_real(p.birth) + "," + format_real(p.death) + "\n";
  }
  detail::write_bytes(path, out);
}

inline PersistenceDiagram load_diagram(const fs::path& path) {
  std::istringstream in(detail::read_bytes(path));
  std::string line;
  if (!std::getline(in, line) || line != "birth,death") throw Error(Errc::MalformedHeader, "diagram header" + detail::at_offset(0));
  PersistenceDiagram pd;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw Error(Errc::MalformedHeader, "diagram row without comma");
    pd.push_back({std::stod(line.substr(0, comma)), std::stod(line.substr(comma + 1))});
  }
  return pd;
}

inline void write_skeleton_csv(std::span<const SkeletonPoint> points, const fs::path& path) {
  std::string out = "x,y,branch_id\n";
  for (const auto& p : points)
    out += std::to_string(p.x) + "," + std::to_string(p.y) + "," + std::to_string(p.branch_id) + "\n";
  detail::write_bytes(path, out);
}

}  // namespace topostruct
