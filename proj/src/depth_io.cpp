#include "mononav/depth_io.hpp"

#include <png.h>

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>

namespace mononav {

namespace {

static_assert(std::endian::native == std::endian::little,
              "depth file I/O assumes a little-endian host");

constexpr std::array<char, 4> kMagic{'M', 'N', 'D', 'P'};

template <typename T>
void put(std::ostream& os, T value) {
  os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& is, const std::filesystem::path& path) {
  T value{};
  is.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!is) throw IoError("truncated depth file: " + path.string());
  return value;
}

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace

void write_depth_mndp(const std::filesystem::path& path, const DepthImage& img) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open for writing: " + path.string());
  const Intrinsics& k = img.intrinsics();
  os.write(kMagic.data(), kMagic.size());
  put<std::uint32_t>(os, static_cast<std::uint32_t>(k.width));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(k.height));
  for (const double v : {k.fx, k.fy, k.cx, k.cy, static_cast<double>(k.width),
                         static_cast<double>(k.height)}) {
    put<double>(os, v);
  }
  os.write(reinterpret_cast<const char*>(img.data().data()),
           static_cast<std::streamsize>(img.data().size() * sizeof(float)));
  if (!os) throw IoError("write failed: " + path.string());
}

DepthImage read_depth_mndp(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open depth file: " + path.string());
  std::array<char, 4> magic{};
  is.read(magic.data(), magic.size());
  if (!is || magic != kMagic) throw IoError("not an MNDP depth file: " + path.string());

  Intrinsics k;
  k.width = static_cast<int>(get<std::uint32_t>(is, path));
  k.height = static_cast<int>(get<std::uint32_t>(is, path));
  k.fx = get<double>(is, path);
  k.fy = get<double>(is, path);
  k.cx = get<double>(is, path);
  k.cy = get<double>(is, path);
  get<double>(is, path);
  get<double>(is, path);

  std::vector<float> data(static_cast<std::size_t>(k.width) * static_cast<std::size_t>(k.height));
  is.read(reinterpret_cast<char*>(data.data()),
          static_cast<std::streamsize>(data.size() * sizeof(float)));
  if (!is) throw IoError("truncated depth file: " + path.string());

  DepthImage img(k, std::move(data));
  img.validate();
  return img;
}

void write_depth_png(const std::filesystem::path& path, const DepthImage& img) {
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw IoError("cannot open for writing: " + path.string());

  std::vector<png_byte> row(static_cast<std::size_t>(img.width()) * 2);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw IoError("libpng initialization failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("PNG write failed: " + path.string());
  }

  const auto w = static_cast<png_uint_32>(img.width());
  const auto h = static_cast<png_uint_32>(img.height());
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, w, h, 16, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);

  // PNG stores 16-bit samples big-endian.
  for (int v = 0; v < img.height(); ++v) {
    for (int u = 0; u < img.width(); ++u) {
      const double mm = std::round(static_cast<double>(img.at(u, v)) * 1000.0);
      const auto code = (mm >= 0.0 && mm <= 65535.0) ? static_cast<std::uint16_t>(mm) : 0;
      row[2 * u] = static_cast<png_byte>(code >> 8);
      row[2 * u + 1] = static_cast<png_byte>(code & 0xff);
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

DepthImage read_depth_png(const std::filesystem::path& path, const Intrinsics& intr) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw IoError("cannot open depth file: " + path.string());

  std::vector<float> data;
  std::vector<png_byte> row;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("libpng initialization failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("PNG read failed: " + path.string());
  }

  png_init_io(png, fp.get());
  png_read_info(png, info);
  const png_uint_32 w = png_get_image_width(png, info);
  const png_uint_32 h = png_get_image_height(png, info);
  const int depth = png_get_bit_depth(png, info);
  const int color = png_get_color_type(png, info);
  if (depth != 16 || color != PNG_COLOR_TYPE_GRAY) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("expected 16-bit grayscale PNG: " + path.string());
  }
  if (static_cast<int>(w) != intr.width || static_cast<int>(h) != intr.height) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("PNG size does not match intrinsics: " + path.string());
  }

  data.resize(static_cast<std::size_t>(w) * h);
  row.resize(static_cast<std::size_t>(w) * 2);
  for (png_uint_32 v = 0; v < h; ++v) {
    png_read_row(png, row.data(), nullptr);
    for (png_uint_32 u = 0; u < w; ++u) {
      const auto code = static_cast<std::uint16_t>((row[2 * u] << 8) | row[2 * u + 1]);
      data[static_cast<std::size_t>(v) * w + u] = static_cast<float>(code) / 1000.0f;
    }
  }
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return DepthImage(intr, std::move(data));
}

}  // namespace mononav
