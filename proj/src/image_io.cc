#include "skoop/image_io.h"

#include <png.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <vector>

#include "skoop/error.h"

namespace skoop {

namespace fs = std::filesystem;

ImageFormat format_from_path(const fs::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (ext == ".png") return ImageFormat::kPng;
  if (ext == ".skimg" || ext == ".raw") return ImageFormat::kRaw;
  throw IoError("unsupported image extension '" + ext + "' (" + path.string() + ")");
}

unsigned char quantize_u8(double v) {
  const double c = std::clamp(v, 0.0, 1.0);
  return static_cast<unsigned char>(std::floor(c * 255.0 + 0.5));
}

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

void put_u32(std::vector<char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint32_t get_u32(const unsigned char* p) {
  return std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 |
         std::uint32_t(p[2]) << 16 | std::uint32_t(p[3]) << 24;
}

Image load_raw(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  if (bytes.size() < kRawHeaderBytes ||
      std::memcmp(bytes.data(), kRawMagic, sizeof(kRawMagic)) != 0) {
    throw IoError(path.string() + ": not a raw float image (bad magic)");
  }
  const Shape shape{static_cast<int>(get_u32(&bytes[8])),
                    static_cast<int>(get_u32(&bytes[12])),
                    static_cast<int>(get_u32(&bytes[16]))};
  if (shape.channels < 1 || shape.height < 1 || shape.width < 1) {
    throw IoError(path.string() + ": invalid extents " + shape.to_string());
  }
  if (bytes.size() != kRawHeaderBytes + 4 * shape.size()) {
    throw IoError(path.string() + ": expected " +
                  std::to_string(kRawHeaderBytes + 4 * shape.size()) +
                  " bytes, found " + std::to_string(bytes.size()));
  }
  std::vector<double> data(shape.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    data[i] = std::bit_cast<float>(get_u32(&bytes[kRawHeaderBytes + 4 * i]));
  }
  try {
    return Image(shape, std::move(data));
  } catch (const Error& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

void save_raw(const Image& img, const fs::path& path) {
  std::vector<char> out(kRawMagic, kRawMagic + sizeof(kRawMagic));
  out.reserve(kRawHeaderBytes + 4 * img.size());
  put_u32(out, static_cast<std::uint32_t>(img.channels()));
  put_u32(out, static_cast<std::uint32_t>(img.height()));
  put_u32(out, static_cast<std::uint32_t>(img.width()));
  for (double v : img.data()) {
    put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write " + path.string());
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw IoError("write failed: " + path.string());
}

struct PngRead {
  png_structp png = nullptr;
  png_infop info = nullptr;
  ~PngRead() { png_destroy_read_struct(&png, info ? &info : nullptr, nullptr); }
};

struct PngWrite {
  png_structp png = nullptr;
  png_infop info = nullptr;
  ~PngWrite() { png_destroy_write_struct(&png, info ? &info : nullptr); }
};

void silent_warning(png_structp, png_const_charp) {}

Image load_png(const fs::path& path) {
  FilePtr file(std::fopen(path.c_str(), "rb"));
  if (!file) throw IoError("cannot open " + path.string());
  unsigned char sig[8];
  if (std::fread(sig, 1, 8, file.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    throw IoError(path.string() + ": not a PNG file");
  }
  PngRead r;
  r.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr,
                                 silent_warning);
  if (!r.png) throw IoError("libpng: out of memory");
  r.info = png_create_info_struct(r.png);
  if (!r.info) throw IoError("libpng: out of memory");

  // Rows are allocated by libpng (freed with the read struct), so no C++
  // objects with destructors live across the longjmp boundary below.
  if (setjmp(png_jmpbuf(r.png))) {
    throw IoError(path.string() + ": corrupt PNG");
  }
  png_init_io(r.png, file.get());
  png_set_sig_bytes(r.png, 8);
  png_read_png(r.png, r.info,
               PNG_TRANSFORM_EXPAND | PNG_TRANSFORM_STRIP_ALPHA |
                   PNG_TRANSFORM_PACKING,
               nullptr);

  const int width = static_cast<int>(png_get_image_width(r.png, r.info));
  const int height = static_cast<int>(png_get_image_height(r.png, r.info));
  const int depth = png_get_bit_depth(r.png, r.info);
  const int channels = png_get_channels(r.png, r.info);
  png_bytepp rows = png_get_rows(r.png, r.info);

  Image img({channels, height, width});
  const double max_value = depth == 16 ? 65535.0 : 255.0;
  for (int y = 0; y < height; ++y) {
    const png_bytep row = rows[y];
    for (int x = 0; x < width; ++x) {
      for (int c = 0; c < channels; ++c) {
        const std::size_t i = static_cast<std::size_t>(x) * channels + c;
        const double v = depth == 16 ? (row[2 * i] << 8 | row[2 * i + 1]) : row[i];
        img.at(c, y, x) = v / max_value;
      }
    }
  }
  return img;
}

void save_png(const Image& img, const fs::path& path) {
  const int channels = img.channels();
  static constexpr int kColorType[] = {PNG_COLOR_TYPE_GRAY, PNG_COLOR_TYPE_GRAY_ALPHA,
                                       PNG_COLOR_TYPE_RGB, PNG_COLOR_TYPE_RGB_ALPHA};
  if (channels < 1 || channels > 4) {
    throw IoError("PNG output supports 1-4 channels, image has " +
                  std::to_string(channels));
  }
  std::vector<unsigned char> pixels(img.size());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      for (int c = 0; c < channels; ++c) {
        pixels[(static_cast<std::size_t>(y) * img.width() + x) * channels + c] =
            quantize_u8(img.at(c, y, x));
      }
    }
  }
  std::vector<png_bytep> rows(img.height());
  for (int y = 0; y < img.height(); ++y) {
    rows[y] = pixels.data() + static_cast<std::size_t>(y) * img.width() * channels;
  }

  FilePtr file(std::fopen(path.c_str(), "wb"));
  if (!file) throw IoError("cannot write " + path.string());
  PngWrite w;
  w.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr,
                                  silent_warning);
  if (!w.png) throw IoError("libpng: out of memory");
  w.info = png_create_info_struct(w.png);
  if (!w.info) throw IoError("libpng: out of memory");
  if (setjmp(png_jmpbuf(w.png))) {
    throw IoError("PNG write failed: " + path.string());
  }
  png_init_io(w.png, file.get());
  png_set_IHDR(w.png, w.info, img.width(), img.height(), 8,
               kColorType[channels - 1], PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_set_rows(w.png, w.info, rows.data());
  png_write_png(w.png, w.info, PNG_TRANSFORM_IDENTITY, nullptr);
}

}  // namespace

Image load_image(const fs::path& path) {
  if (!fs::exists(path)) throw IoError("no such file: " + path.string());
  return format_from_path(path) == ImageFormat::kPng ? load_png(path)
                                                     : load_raw(path);
}

void save_image(const Image& img, const fs::path& path, ImageFormat format) {
  if (format == ImageFormat::kPng) {
    save_png(img, path);
  } else {
    save_raw(img, path);
  }
}

void save_image(const Image& img, const fs::path& path) {
  save_image(img, path, format_from_path(path));
}

}  // namespace skoop
