// File formats: imgf64 (lossless float64), PGM (P2/P5) and binary PPM output.
//
// imgf64: "IMF8", u32 LE width, u32 LE height, u32 LE channels, then
// width·height·channels float64 LE, row-major with channels interleaved.
#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "vimg/apps.hpp"
#include "vimg/grid.hpp"
#include "vimg/spectral.hpp"

namespace vimg {

static_assert(std::endian::native == std::endian::little, "imgf64 I/O assumes a little-endian host");

struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct MalformedHeader : FormatError {
  using FormatError::FormatError;
};
struct DimensionOverflow : FormatError {
  using FormatError::FormatError;
};
struct TruncatedPayload : FormatError {
  using FormatError::FormatError;
};

// Largest accepted width·height·channels (2³² samples).
inline constexpr std::uint64_t kMaxSamples = std::uint64_t{1} << 32;

// ---------------------------------------------------------------------------
// imgf64

inline void write_imgf64(std::ostream& os, const VectorField& f) {
  const std::uint32_t hdr[3] = {static_cast<std::uint32_t>(f.width()), static_cast<std::uint32_t>(f.height()),
                                static_cast<std::uint32_t>(f.channels())};
  os.write("IMF8", 4);
  os.write(reinterpret_cast<const char*>(hdr), sizeof hdr);
  std::vector<double> buf(f.size());
  const std::size_t k = f.channels(), n = f.pixels();
  for (std::size_t c = 0; c < k; ++c) {
    auto ch = f.channel(c);
    for (std::size_t i = 0; i < n; ++i) buf[i * k + c] = ch[i];
  }
  os.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(double)));
  if (!os) throw std::runtime_error("imgf64 write failed");
}

inline VectorField read_imgf64(std::istream& is, Boundary b = Boundary::Symmetric) {
  char magic[4];
  std::uint32_t hdr[3];
  if (!is.read(magic, 4) || std::memcmp(magic, "IMF8", 4) != 0) throw MalformedHeader("imgf64: bad magic");
  if (!is.read(reinterpret_cast<char*>(hdr), sizeof hdr)) throw MalformedHeader("imgf64: short header");
  if (hdr[0] == 0 || hdr[1] == 0 || hdr[2] == 0) throw MalformedHeader("imgf64: zero dimension");
  const std::uint64_t total = std::uint64_t{hdr[0]} * hdr[1] * hdr[2];
  if (total > kMaxSamples) throw DimensionOverflow("imgf64: dimensions too large");
  std::vector<double> buf(total);
  if (!is.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(total * sizeof(double))))
    throw TruncatedPayload("imgf64: payload shorter than the header declares");
  VectorField f(GridShape{hdr[0], hdr[1], b}, hdr[2]);
  const std::size_t k = hdr[2], n = f.pixels();
  for (std::size_t c = 0; c < k; ++c) {
    auto ch = f.channel(c);
    for (std::size_t i = 0; i < n; ++i) ch[i] = buf[i * k + c];
  }
  return f;
}

inline void save_imgf64(const std::string& path, const VectorField& f) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  write_imgf64(os, f);
}

inline void save_imgf64(const std::string& path, const ImageGrid& img) {
  save_imgf64(path, VectorField::from_image(img));
}

inline VectorField load_imgf64(const std::string& path, Boundary b = Boundary::Symmetric) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path);
  return read_imgf64(is, b);
}

/// k-space as a 2-channel (real, imaginary) field.
inline VectorField complex_to_field(const ComplexField& x) {
  VectorField f(x.shape, 2);
  for (std::size_t i = 0; i < x.data.size(); ++i) {
    f.channel(0)[i] = x.data[i].real();
    f.channel(1)[i] = x.data[i].imag();
  }
  return f;
}

inline ComplexField field_to_complex(const VectorField& f) {
  if (f.channels() != 2) throw std::invalid_argument("k-space file needs 2 channels");
  ComplexField x(f.shape());
  for (std::size_t i = 0; i < x.data.size(); ++i) x.data[i] = {f.channel(0)[i], f.channel(1)[i]};
  return x;
}

inline SamplingMask load_mask(const std::string& path) {
  VectorField f = load_imgf64(path);
  if (f.channels() != 1) throw std::invalid_argument("mask file needs 1 channel");
  return make_mask(f.channel_image(0));
}

// ---------------------------------------------------------------------------
// PGM / PPM

namespace detail {

// Next whitespace-delimited header token, skipping '#' comments.
inline std::string pnm_token(std::istream& is) {
  std::string tok;
  int c;
  while ((c = is.get()) != EOF) {
    if (c == '#') {
      while ((c = is.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(c));
  }
  return tok;
}

inline std::uint64_t pnm_number(std::istream& is, const char* what) {
  const std::string tok = pnm_token(is);
  if (tok.empty() || tok.find_first_not_of("0123456789") != std::string::npos)
    throw MalformedHeader(std::string("pgm: bad ") + what);
  if (tok.size() > 10) throw DimensionOverflow(std::string("pgm: ") + what + " too large");
  return std::stoull(tok);
}

}  // namespace detail

/// P2 or P5, normalized to [0, 1] by maxval.
inline ImageGrid read_pgm(std::istream& is, Boundary b = Boundary::Symmetric) {
  const std::string magic = detail::pnm_token(is);
  if (magic != "P2" && magic != "P5") throw MalformedHeader("pgm: magic must be P2 or P5");
  const std::uint64_t w = detail::pnm_number(is, "width");
  const std::uint64_t h = detail::pnm_number(is, "height");
  const std::uint64_t maxval = detail::pnm_number(is, "maxval");
  if (w == 0 || h == 0) throw MalformedHeader("pgm: zero dimension");
  if (maxval == 0 || maxval > 65535) throw MalformedHeader("pgm: maxval must lie in [1, 65535]");
  if (w > std::numeric_limits<std::uint32_t>::max() || h > std::numeric_limits<std::uint32_t>::max() ||
      w * h > kMaxSamples)
    throw DimensionOverflow("pgm: dimensions too large");
  ImageGrid img(GridShape{w, h, b});
  const double scale = 1.0 / static_cast<double>(maxval);
  if (magic == "P2") {
    for (double& v : img.values()) {
      const std::string tok = detail::pnm_token(is);
      if (tok.empty()) throw TruncatedPayload("pgm: fewer samples than width*height");
      if (tok.find_first_not_of("0123456789") != std::string::npos) throw MalformedHeader("pgm: bad sample");
      const auto s = std::stoull(tok);
      if (s > maxval) throw MalformedHeader("pgm: sample exceeds maxval");
      v = static_cast<double>(s) * scale;
    }
    return img;
  }
  const std::size_t bytes = maxval < 256 ? 1 : 2;
  std::vector<unsigned char> buf(img.size() * bytes);
  if (!is.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size())))
    throw TruncatedPayload("pgm: payload shorter than width*height");
  for (std::size_t i = 0; i < img.size(); ++i) {
    const unsigned s = bytes == 1 ? buf[i] : (unsigned{buf[2 * i]} << 8) | buf[2 * i + 1];
    img.data()[i] = static_cast<double>(s) * scale;
  }
  return img;
}

inline ImageGrid load_pgm(const std::string& path, Boundary b = Boundary::Symmetric) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path);
  return read_pgm(is, b);
}

/// Binary P5 with maxval 255; values are clamped to [0, 1].
inline void write_pgm(std::ostream& os, const ImageGrid& img) {
  os << "P5\n" << img.width() << ' ' << img.height() << "\n255\n";
  std::vector<unsigned char> buf(img.size());
  for (std::size_t i = 0; i < img.size(); ++i)
    buf[i] = static_cast<unsigned char>(std::lround(255.0 * std::clamp(img.data()[i], 0.0, 1.0)));
  os.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
}

inline void save_pgm(const std::string& path, const ImageGrid& img) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  write_pgm(os, img);
}

inline void write_ppm(std::ostream& os, const ColorImage& img) {
  os << "P6\n" << img.width << ' ' << img.height << "\n255\n";
  os.write(reinterpret_cast<const char*>(img.rgb.data()), static_cast<std::streamsize>(img.rgb.size()));
}

inline void save_ppm(const std::string& path, const ColorImage& img) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  write_ppm(os, img);
}

/// Picks the reader from the extension: .pgm, otherwise imgf64 (channel 0).
inline ImageGrid load_image(const std::string& path, Boundary b = Boundary::Symmetric) {
  if (path.size() >= 4 && path.compare(path.size() - 4, 4, ".pgm") == 0) return load_pgm(path, b);
  VectorField f = load_imgf64(path, b);
  if (f.channels() != 1) throw std::invalid_argument(path + ": expected a single-channel image");
  return f.channel_image(0);
}

}  // namespace vimg
