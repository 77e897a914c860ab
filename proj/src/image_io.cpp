#include "evfuse/image_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>

#include <png.h>

#include "evfuse/error.hpp"

namespace evfuse {

void WritePfm(const std::string& path, const Image<float>& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path);
  out << "Pf\n" << image.width() << ' ' << image.height() << "\n-1.0\n";
  for (int y = image.height() - 1; y >= 0; --y) {
    for (int x = 0; x < image.width(); ++x) {
      unsigned char bytes[4];
      const float v = image(x, y);
      std::memcpy(bytes, &v, 4);
      if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + 4);
      out.write(reinterpret_cast<const char*>(bytes), 4);
    }
  }
  if (!out) throw Error(ErrorKind::kIo, "write failed: " + path);
}

Image<float> ReadPfm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path);
  std::string magic;
  int w = 0, h = 0;
  double scale = 0.0;
  in >> magic >> w >> h >> scale;
  in.get();
  if (magic != "Pf" || w <= 0 || h <= 0 || scale == 0.0) {
    throw Error(ErrorKind::kParse, "not a single-channel PFM: " + path);
  }
  const bool little = scale < 0.0;
  Image<float> image(w, h);
  for (int y = h - 1; y >= 0; --y) {
    for (int x = 0; x < w; ++x) {
      unsigned char bytes[4];
      if (!in.read(reinterpret_cast<char*>(bytes), 4)) {
        throw Error(ErrorKind::kParse, "truncated PFM: " + path);
      }
      const bool swap = little != (std::endian::native == std::endian::little);
      if (swap) std::reverse(bytes, bytes + 4);
      std::memcpy(&image(x, y), bytes, 4);
    }
  }
  return image;
}

namespace {

void WritePng(const std::string& path, int width, int height, int color_type,
              const std::vector<const std::uint8_t*>& rows) {
  std::unique_ptr<FILE, int (*)(FILE*)> fp(std::fopen(path.c_str(), "wb"), &std::fclose);
  if (!fp) throw Error(ErrorKind::kIo, "cannot write " + path);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorKind::kIo, "libpng initialization failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorKind::kIo, "PNG encoding failed: " + path);
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, width, height, 8, color_type, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (const std::uint8_t* row : rows) png_write_row(png, const_cast<png_bytep>(row));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace

void WritePngGray(const std::string& path, const Image<std::uint8_t>& image) {
  std::vector<const std::uint8_t*> rows(image.height());
  for (int y = 0; y < image.height(); ++y) rows[y] = &image(0, y);
  WritePng(path, image.width(), image.height(), PNG_COLOR_TYPE_GRAY, rows);
}

void WritePngRgba(const std::string& path, const Image<Rgba>& image) {
  std::vector<const std::uint8_t*> rows(image.height());
  for (int y = 0; y < image.height(); ++y) rows[y] = image(0, y).data();
  WritePng(path, image.width(), image.height(), PNG_COLOR_TYPE_RGBA, rows);
}

Rgba Jet(double s) {
  s = std::clamp(s, 0.0, 1.0);
  auto channel = [](double v) {
    return static_cast<std::uint8_t>(std::lround(255.0 * std::clamp(v, 0.0, 1.0)));
  };
  const double r = 1.5 - std::abs(4.0 * s - 3.0);
  const double g = 1.5 - std::abs(4.0 * s - 2.0);
  const double b = 1.5 - std::abs(4.0 * s - 1.0);
  return {channel(r), channel(g), channel(b), 255};
}

Image<Rgba> ColorizeDepth(const DepthResult& result, double z_min, double z_max) {
  const int w = result.depth.width(), h = result.depth.height();
  Image<Rgba> out(w, h, Rgba{0, 0, 0, 0});
  const double span = z_max - z_min;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!result.Has(x, y)) continue;
      const double s = span > 0.0 ? (result.depth(x, y) - z_min) / span : 0.0;
      out(x, y) = Jet(1.0 - s);
    }
  }
  return out;
}

Image<std::uint8_t> NegatedConfidence(const Image<float>& confidence) {
  float max_v = 0.0f;
  for (float v : confidence.data()) max_v = std::max(max_v, v);
  Image<std::uint8_t> out(confidence.width(), confidence.height(), 255);
  if (max_v <= 0.0f) return out;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double v = 255.0 * confidence.data()[i] / max_v;
    out.data()[i] = static_cast<std::uint8_t>(255 - std::lround(std::clamp(v, 0.0, 255.0)));
  }
  return out;
}

Image<Rgba> PseudoColor(const Image<float>& image) {
  float max_v = 0.0f;
  for (float v : image.data()) max_v = std::max(max_v, v);
  Image<Rgba> out(image.width(), image.height(), Jet(0.0));
  if (max_v <= 0.0f) return out;
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = Jet(image.data()[i] / max_v);
  return out;
}

void WritePlyAscii(const std::string& path, const std::vector<Eigen::Vector3d>& points) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path);
  out << "ply\nformat ascii 1.0\nelement vertex " << points.size()
      << "\nproperty float x\nproperty float y\nproperty float z\nend_header\n";
  char line[96];
  for (const auto& p : points) {
    std::snprintf(line, sizeof(line), "%.6f %.6f %.6f\n", p.x(), p.y(), p.z());
    out << line;
  }
  if (!out) throw Error(ErrorKind::kIo, "write failed: " + path);
}

}  // namespace evfuse
