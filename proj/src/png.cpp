#include "sgp/png.hpp"

#include <png.h>

#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

namespace sgp {
namespace {

struct WriteState {
  std::vector<std::uint8_t>* out;
};

struct ReadState {
  std::span<const std::uint8_t> bytes;
  std::size_t pos = 0;
};

// Errors longjmp back to the setjmp point in the caller, which then throws.
void on_error(png_structp png, png_const_charp message) {
  auto* slot = static_cast<std::string*>(png_get_error_ptr(png));
  if (slot) *slot = message;
  png_longjmp(png, 1);
}
void on_warning(png_structp, png_const_charp) {}

}  // namespace

std::vector<std::uint8_t> encode_png(const RasterImage& image) {
  if (image.width < 1 || image.height < 1 ||
      image.data.size() != static_cast<std::size_t>(image.width) * image.height * 3)
    throw PngError("invalid raster for PNG encoding");

  std::string message;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &message, on_error, on_warning);
  if (!png) throw PngError("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  std::vector<std::uint8_t> out;
  WriteState state{&out};
  const std::size_t stride = static_cast<std::size_t>(image.width) * 3;
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw PngError("PNG encode failed: " + message);
  }
  {
    png_set_write_fn(
        png, &state,
        [](png_structp p, png_bytep data, png_size_t len) {
          auto* s = static_cast<WriteState*>(png_get_io_ptr(p));
          s->out->insert(s->out->end(), data, data + len);
        },
        nullptr);
    png_set_IHDR(png, info, static_cast<png_uint_32>(image.width), static_cast<png_uint_32>(image.height),
                 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < image.height; ++y)
      png_write_row(png, const_cast<png_bytep>(image.data.data() + y * stride));
    png_write_end(png, nullptr);
  }
  png_destroy_write_struct(&png, &info);
  return out;
}

RasterImage decode_png(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) throw PngError("not a PNG");
  std::string message;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &message, on_error, on_warning);
  if (!png) throw PngError("png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  ReadState state{bytes};
  RasterImage image;
  std::vector<png_bytep> rows;
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw PngError("PNG decode failed: " + message);
  }
  {
    png_set_read_fn(png, &state, [](png_structp p, png_bytep data, png_size_t len) {
      auto* s = static_cast<ReadState*>(png_get_io_ptr(p));
      if (s->pos + len > s->bytes.size()) png_error(p, "truncated PNG");
      std::memcpy(data, s->bytes.data() + s->pos, len);
      s->pos += len;
    });
    png_read_info(png, info);
    png_set_expand(png);
    png_set_strip_16(png);
    png_set_gray_to_rgb(png);
    png_color_16 white{0, 255, 255, 255, 255};
    png_set_background(png, &white, PNG_BACKGROUND_GAMMA_SCREEN, 0, 1.0);
    png_read_update_info(png, info);
    const int width = static_cast<int>(png_get_image_width(png, info));
    const int height = static_cast<int>(png_get_image_height(png, info));
    const std::size_t rowbytes = png_get_rowbytes(png, info);
    if (png_get_channels(png, info) != 3 || rowbytes != static_cast<std::size_t>(width) * 3)
      png_error(png, "unsupported PNG layout");
    image = RasterImage(width, height);
    rows.resize(static_cast<std::size_t>(height));
    for (int y = 0; y < height; ++y) rows[y] = image.data.data() + y * rowbytes;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
  }
  png_destroy_read_struct(&png, &info, nullptr);
  return image;
}

RasterImage read_png_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw PngError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_png(bytes);
}

}  // namespace sgp
