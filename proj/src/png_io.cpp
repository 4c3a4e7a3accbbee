#include "rebarscan/png_io.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <memory>
#include <vector>

namespace rebarscan {

static_assert(sizeof(Rgb) == 3, "Rgb must be tightly packed for row copies");

namespace {

// libpng reports errors by longjmp. Every function below that calls
// setjmp keeps only trivially destructible locals; buffers are owned by
// the callers.

struct FileCloser {
  void operator()(std::FILE* f) const noexcept {
    if (f != nullptr) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

enum class ReadAs { Rgb8, Gray8, Raw };

struct ReadState {
  png_structp png = nullptr;
  png_infop info = nullptr;
  ~ReadState() {
    if (png != nullptr) png_destroy_read_struct(&png, info != nullptr ? &info : nullptr, nullptr);
  }
};

struct Header {
  png_uint_32 width = 0;
  png_uint_32 height = 0;
  int bit_depth = 0;
  int color_type = 0;
  std::size_t rowbytes = 0;
};

bool read_header(ReadState& st, std::FILE* fp, ReadAs mode, Header& h) {
  if (setjmp(png_jmpbuf(st.png))) return false;
  png_init_io(st.png, fp);
  png_read_info(st.png, st.info);
  png_get_IHDR(st.png, st.info, &h.width, &h.height, &h.bit_depth, &h.color_type, nullptr,
               nullptr, nullptr);
  if (mode != ReadAs::Raw) {
    png_set_expand(st.png);
    png_set_strip_16(st.png);
    png_set_strip_alpha(st.png);
    const bool is_color = (h.color_type & PNG_COLOR_MASK_COLOR) != 0;
    if (mode == ReadAs::Rgb8 && !is_color) png_set_gray_to_rgb(st.png);
    if (mode == ReadAs::Gray8 && is_color) png_set_rgb_to_gray_fixed(st.png, 1, -1, -1);
  }
  png_read_update_info(st.png, st.info);
  h.rowbytes = png_get_rowbytes(st.png, st.info);
  return true;
}

bool read_rows(ReadState& st, png_bytepp rows) {
  if (setjmp(png_jmpbuf(st.png))) return false;
  png_read_image(st.png, rows);
  png_read_end(st.png, nullptr);
  return true;
}

std::vector<std::uint8_t> read_png(const std::filesystem::path& path, ReadAs mode, Header& h) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw IoError("cannot open " + path.string());
  png_byte sig[8];
  if (std::fread(sig, 1, 8, fp.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    throw IoError("not a PNG file: " + path.string());
  }
  ReadState st;
  st.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (st.png == nullptr) throw IoError("png_create_read_struct failed");
  st.info = png_create_info_struct(st.png);
  if (st.info == nullptr) throw IoError("png_create_info_struct failed");
  png_set_sig_bytes(st.png, 8);
  if (!read_header(st, fp.get(), mode, h)) throw IoError("corrupt PNG header: " + path.string());
  if (h.width == 0 || h.height == 0 || h.width > (1u << 15) || h.height > (1u << 15)) {
    throw IoError("unsupported PNG dimensions: " + path.string());
  }

  std::vector<std::uint8_t> data(h.rowbytes * h.height);
  std::vector<png_bytep> rows(h.height);
  for (png_uint_32 y = 0; y < h.height; ++y) rows[y] = data.data() + y * h.rowbytes;
  if (!read_rows(st, rows.data())) throw IoError("corrupt PNG data: " + path.string());
  return data;
}

struct WriteState {
  png_structp png = nullptr;
  png_infop info = nullptr;
  ~WriteState() {
    if (png != nullptr) png_destroy_write_struct(&png, info != nullptr ? &info : nullptr);
  }
};

bool write_rows(WriteState& st, std::FILE* fp, png_uint_32 w, png_uint_32 h, int bit_depth,
                int color_type, png_bytepp rows) {
  if (setjmp(png_jmpbuf(st.png))) return false;
  png_init_io(st.png, fp);
  png_set_IHDR(st.png, st.info, w, h, bit_depth, color_type, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(st.png, st.info);
  png_write_image(st.png, rows);
  png_write_end(st.png, nullptr);
  return true;
}

void write_png(const std::filesystem::path& path, int width, int height, int bit_depth,
               int color_type, std::size_t rowbytes, std::vector<std::uint8_t>& data) {
  if (width < 1 || height < 1) throw PreconditionError("cannot write an empty image");
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw IoError("cannot write " + path.string());
  WriteState st;
  st.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (st.png == nullptr) throw IoError("png_create_write_struct failed");
  st.info = png_create_info_struct(st.png);
  if (st.info == nullptr) throw IoError("png_create_info_struct failed");
  std::vector<png_bytep> rows(static_cast<std::size_t>(height));
  for (int y = 0; y < height; ++y) rows[static_cast<std::size_t>(y)] = data.data() + y * rowbytes;
  if (!write_rows(st, fp.get(), static_cast<png_uint_32>(width), static_cast<png_uint_32>(height),
                  bit_depth, color_type, rows.data())) {
    throw IoError("failed writing PNG " + path.string());
  }
  if (std::fflush(fp.get()) != 0) throw IoError("failed flushing " + path.string());
}

}  // namespace

RasterImage read_png_rgb(const std::filesystem::path& path) {
  Header h;
  const std::vector<std::uint8_t> data = read_png(path, ReadAs::Rgb8, h);
  if (h.rowbytes != static_cast<std::size_t>(h.width) * 3) {
    throw IoError("unexpected PNG layout: " + path.string());
  }
  RasterImage img(static_cast<int>(h.width), static_cast<int>(h.height));
  std::memcpy(img.values().data(), data.data(), data.size());
  return img;
}

void write_png_rgb(const std::filesystem::path& path, const RasterImage& image) {
  std::vector<std::uint8_t> data(image.size() * 3);
  std::memcpy(data.data(), image.values().data(), data.size());
  write_png(path, image.width(), image.height(), 8, PNG_COLOR_TYPE_RGB,
            static_cast<std::size_t>(image.width()) * 3, data);
}

BinaryMask read_png_mask(const std::filesystem::path& path) {
  Header h;
  const std::vector<std::uint8_t> data = read_png(path, ReadAs::Gray8, h);
  if (h.rowbytes != h.width) throw IoError("unexpected PNG layout: " + path.string());
  BinaryMask mask(static_cast<int>(h.width), static_cast<int>(h.height), 0);
  for (std::size_t i = 0; i < data.size(); ++i) mask[i] = data[i] != 0 ? 1 : 0;
  return mask;
}

void write_png_mask(const std::filesystem::path& path, const BinaryMask& mask) {
  std::vector<std::uint8_t> data(mask.size());
  for (std::size_t i = 0; i < mask.size(); ++i) data[i] = mask[i] != 0 ? 255 : 0;
  write_png(path, mask.width(), mask.height(), 8, PNG_COLOR_TYPE_GRAY,
            static_cast<std::size_t>(mask.width()), data);
}

ConfidenceMap read_png_confidence16(const std::filesystem::path& path) {
  Header h;
  const std::vector<std::uint8_t> data = read_png(path, ReadAs::Raw, h);
  if (h.bit_depth != 16 || h.color_type != PNG_COLOR_TYPE_GRAY) {
    throw IoError("expected 16-bit single-channel PNG: " + path.string());
  }
  ConfidenceMap conf(static_cast<int>(h.width), static_cast<int>(h.height), 0.0f);
  for (std::size_t y = 0; y < h.height; ++y) {
    const std::uint8_t* row = data.data() + y * h.rowbytes;
    for (std::size_t x = 0; x < h.width; ++x) {
      const unsigned v = (static_cast<unsigned>(row[2 * x]) << 8) | row[2 * x + 1];
      conf[y * h.width + x] = static_cast<float>(v / 65535.0);
    }
  }
  return conf;
}

void write_png_confidence16(const std::filesystem::path& path, const ConfidenceMap& conf) {
  validate_confidence(conf);
  const auto rowbytes = static_cast<std::size_t>(conf.width()) * 2;
  std::vector<std::uint8_t> data(conf.size() * 2);
  for (std::size_t i = 0; i < conf.size(); ++i) {
    const auto v = static_cast<unsigned>(std::lround(static_cast<double>(conf[i]) * 65535.0));
    data[2 * i] = static_cast<std::uint8_t>(v >> 8);
    data[2 * i + 1] = static_cast<std::uint8_t>(v & 0xff);
  }
  write_png(path, conf.width(), conf.height(), 16, PNG_COLOR_TYPE_GRAY, rowbytes, data);
}

}  // namespace rebarscan
