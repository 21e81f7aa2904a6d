#include "scatlite/io.hpp"

#include <png.h>
#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <memory>
#include <random>

#include "scatlite/error.hpp"

namespace scatlite {
namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] void png_error_fn(png_structp png, png_const_charp msg) {
  auto* what = static_cast<std::string*>(png_get_error_ptr(png));
  if (what) *what = msg;
  png_longjmp(png, 1);
}

void png_warning_fn(png_structp, png_const_charp) {}

std::filesystem::path temp_sibling(const std::filesystem::path& path) {
  static thread_local std::mt19937_64 rng{std::random_device{}()};
  char suffix[32];
  std::snprintf(suffix, sizeof suffix, ".tmp%016llx", static_cast<unsigned long long>(rng()));
  auto tmp = path;
  tmp += suffix;
  return tmp;
}

template <class T>
void put_le(std::vector<std::byte>& out, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<std::byte>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xff));
  }
}

template <class T>
T get_le(const std::byte* p) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return static_cast<T>(v);
}

std::size_t dtype_size(TensorDType d) { return d == TensorDType::Float32 ? 4 : 8; }

}  // namespace

// ---------------------------------------------------------------------------
// PNG
// ---------------------------------------------------------------------------

ImageTensor load_image(const std::filesystem::path& path, std::optional<std::size_t> grid_size) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw IoError("cannot open image '" + path.string() + "'");

  png_byte sig[8];
  if (std::fread(sig, 1, 8, fp.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    throw IoError("'" + path.string() + "' is not a PNG file");
  }

  std::string message;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &message, png_error_fn, png_warning_fn);
  if (!png) throw IoError("libpng: cannot allocate read struct");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw IoError("libpng: cannot allocate info struct");
  }

  // Everything touched after setjmp lives in heap storage owned outside the
  // jump so a longjmp cannot skip a destructor we depend on.
  auto rows = std::make_unique<std::vector<png_bytep>>();
  auto pixels = std::make_unique<std::vector<png_byte>>();
  png_uint_32 width = 0;
  png_uint_32 height = 0;
  int bit_depth = 0;
  int color_type = 0;
  int unsupported = 0;

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("cannot decode '" + path.string() + "': " + message);
  }

  png_init_io(png, fp.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  png_get_IHDR(png, info, &width, &height, &bit_depth, &color_type, nullptr, nullptr, nullptr);

  if (bit_depth != 8 && bit_depth != 16) unsupported = 1;
  if (color_type == PNG_COLOR_TYPE_PALETTE) unsupported = 2;
  if (unsupported == 0) {
    if (color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    if (bit_depth == 16) png_set_swap(png);  // little-endian 16-bit samples
    png_read_update_info(png, info);
    const std::size_t rowbytes = png_get_rowbytes(png, info);
    pixels->resize(rowbytes * height);
    rows->resize(height);
    for (png_uint_32 y = 0; y < height; ++y) (*rows)[y] = pixels->data() + y * rowbytes;
    png_read_image(png, rows->data());
    png_read_end(png, nullptr);
  }
  png_destroy_read_struct(&png, &info, nullptr);

  if (unsupported == 1) {
    throw IoError("unsupported PNG bit depth " + std::to_string(bit_depth) + " in '" + path.string() +
                  "' (expected 8 or 16)");
  }
  if (unsupported == 2) throw IoError("palette PNGs are not supported ('" + path.string() + "')");

  const std::size_t channels = (color_type & PNG_COLOR_MASK_COLOR) ? 3 : 1;
  ImageTensor img(channels, height, width);
  const double peak = bit_depth == 16 ? 65535.0 : 255.0;
  for (std::size_t y = 0; y < height; ++y) {
    const png_byte* row = (*rows)[y];
    for (std::size_t x = 0; x < width; ++x) {
      for (std::size_t c = 0; c < channels; ++c) {
        const std::size_t i = x * channels + c;
        double v;
        if (bit_depth == 16) {
          v = static_cast<double>(static_cast<unsigned>(row[2 * i]) | (static_cast<unsigned>(row[2 * i + 1]) << 8));
        } else {
          v = row[i];
        }
        img.at(c, y, x) = v / peak;
      }
    }
  }

  if (grid_size && (img.height() != *grid_size || img.width() != *grid_size)) {
    return crop_and_resize(img, *grid_size);
  }
  return img;
}

ImageTensor crop_and_resize(const ImageTensor& image, std::size_t side) {
  if (side == 0) throw ShapeError("resize target must be positive");
  const std::size_t s = std::min(image.height(), image.width());
  if (s == 0) throw ShapeError("cannot resize an empty image");
  const std::size_t oy = (image.height() - s) / 2;
  const std::size_t ox = (image.width() - s) / 2;
  const double ratio = static_cast<double>(s) / static_cast<double>(side);

  // Source coordinate and blend weight along one axis.
  struct Tap {
    std::size_t i0, i1;
    double w1;
  };
  std::vector<Tap> taps(side);
  for (std::size_t i = 0; i < side; ++i) {
    double src = (static_cast<double>(i) + 0.5) * ratio - 0.5;
    src = std::clamp(src, 0.0, static_cast<double>(s - 1));
    const auto i0 = static_cast<std::size_t>(std::floor(src));
    const std::size_t i1 = std::min(i0 + 1, s - 1);
    taps[i] = {i0, i1, src - static_cast<double>(i0)};
  }

  ImageTensor out(image.channels(), side, side);
  for (std::size_t c = 0; c < image.channels(); ++c) {
    for (std::size_t y = 0; y < side; ++y) {
      const auto& ty = taps[y];
      for (std::size_t x = 0; x < side; ++x) {
        const auto& tx = taps[x];
        const double a = image.at(c, oy + ty.i0, ox + tx.i0);
        const double b = image.at(c, oy + ty.i0, ox + tx.i1);
        const double d = image.at(c, oy + ty.i1, ox + tx.i0);
        const double e = image.at(c, oy + ty.i1, ox + tx.i1);
        const double top = a + tx.w1 * (b - a);
        const double bottom = d + tx.w1 * (e - d);
        out.at(c, y, x) = top + ty.w1 * (bottom - top);
      }
    }
  }
  return out;
}

void save_png(const ImageTensor& image, const std::filesystem::path& path) {
  if (image.channels() != 1 && image.channels() != 3) {
    throw ShapeError("PNG output needs 1 or 3 channels, got " + std::to_string(image.channels()));
  }
  const std::size_t w = image.width();
  const std::size_t h = image.height();
  const std::size_t ch = image.channels();
  std::vector<png_byte> pixels(w * h * ch);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      for (std::size_t c = 0; c < ch; ++c) {
        double v = image.at(c, y, x);
        v = std::isfinite(v) ? std::clamp(v, 0.0, 1.0) : 0.0;
        pixels[(y * w + x) * ch + c] = static_cast<png_byte>(std::lround(v * 255.0));
      }
    }
  }

  const auto tmp = temp_sibling(path);
  {
    FilePtr fp(std::fopen(tmp.c_str(), "wb"));
    if (!fp) throw IoError("cannot write '" + tmp.string() + "'");
    std::string message;
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &message, png_error_fn, png_warning_fn);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
      png_destroy_write_struct(&png, &info);
      throw IoError("libpng: cannot allocate write structs");
    }
    auto rows = std::make_unique<std::vector<png_bytep>>(h);
    for (std::size_t y = 0; y < h; ++y) (*rows)[y] = pixels.data() + y * w * ch;
    if (setjmp(png_jmpbuf(png))) {
      png_destroy_write_struct(&png, &info);
      fp.reset();
      std::filesystem::remove(tmp);
      throw IoError("cannot encode '" + path.string() + "': " + message);
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), 8,
                 ch == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    png_write_image(png, rows->data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
  }
  std::filesystem::rename(tmp, path);
}

// ---------------------------------------------------------------------------
// SCT1
// ---------------------------------------------------------------------------

std::uint32_t crc32(std::span<const std::byte> bytes) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  const auto* p = reinterpret_cast<const Bytef*>(bytes.data());
  std::size_t left = bytes.size();
  while (left > 0) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(left, 1u << 30));
    crc = ::crc32(crc, p, chunk);
    p += chunk;
    left -= chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

std::vector<std::byte> encode_tensor(std::span<const double> values, std::span<const std::uint32_t> dims,
                                     TensorDType dtype) {
  if (dims.size() > 255) throw ShapeError("tensor rank exceeds 255");
  std::uint64_t count = 1;
  for (auto d : dims) {
    count *= d;
    if (count > (std::uint64_t{1} << 32)) throw ShapeError("tensor element count exceeds 2^32");
  }
  if (count != values.size()) {
    throw ShapeError("tensor dims describe " + std::to_string(count) + " values, got " +
                     std::to_string(values.size()));
  }

  std::vector<std::byte> out;
  out.reserve(8 + 4 * dims.size() + values.size() * dtype_size(dtype) + 4);
  for (char c : {'S', 'C', 'T', '1'}) out.push_back(static_cast<std::byte>(c));
  put_le<std::uint16_t>(out, kTensorVersion);
  put_le<std::uint8_t>(out, static_cast<std::uint8_t>(dtype));
  put_le<std::uint8_t>(out, static_cast<std::uint8_t>(dims.size()));
  for (auto d : dims) put_le<std::uint32_t>(out, d);

  const std::size_t payload_start = out.size();
  for (double v : values) {
    if (dtype == TensorDType::Float32) {
      put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    } else {
      put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
    }
  }
  const auto crc = crc32(std::span<const std::byte>(out).subspan(payload_start));
  put_le<std::uint32_t>(out, crc);
  return out;
}

TensorData decode_tensor(std::span<const std::byte> bytes) {
  if (bytes.size() < 8) throw CorruptFileError("tensor file truncated (header)");
  if (std::memcmp(bytes.data(), "SCT1", 4) != 0) throw CorruptFileError("bad tensor magic (expected SCT1)");
  const auto version = get_le<std::uint16_t>(bytes.data() + 4);
  if (version != kTensorVersion) throw CorruptFileError("unsupported tensor version " + std::to_string(version));
  const auto code = get_le<std::uint8_t>(bytes.data() + 6);
  if (code > 1) throw CorruptFileError("unknown tensor dtype code " + std::to_string(code));
  const auto rank = get_le<std::uint8_t>(bytes.data() + 7);

  TensorData t;
  t.dtype = static_cast<TensorDType>(code);
  std::size_t pos = 8;
  if (bytes.size() < pos + 4u * rank) throw CorruptFileError("tensor file truncated (dims)");
  std::uint64_t count = 1;
  for (std::size_t i = 0; i < rank; ++i, pos += 4) {
    const auto d = get_le<std::uint32_t>(bytes.data() + pos);
    t.dims.push_back(d);
    count *= d;
    if (count > (std::uint64_t{1} << 32)) throw CorruptFileError("tensor element count exceeds 2^32");
  }
  const std::uint64_t payload = count * dtype_size(t.dtype);
  if (bytes.size() != pos + payload + 4) {
    throw CorruptFileError("tensor payload length " + std::to_string(bytes.size() - pos) +
                           " does not match dims (expected " + std::to_string(payload + 4) + ")");
  }
  const auto body = bytes.subspan(pos, payload);
  const auto stored = get_le<std::uint32_t>(bytes.data() + pos + payload);
  if (crc32(body) != stored) throw CorruptFileError("tensor CRC32 mismatch");

  t.values.resize(count);
  const std::size_t width = dtype_size(t.dtype);
  for (std::size_t i = 0; i < count; ++i) {
    const std::byte* p = body.data() + i * width;
    if (t.dtype == TensorDType::Float32) {
      t.values[i] = std::bit_cast<float>(get_le<std::uint32_t>(p));
    } else {
      t.values[i] = std::bit_cast<double>(get_le<std::uint64_t>(p));
    }
  }
  return t;
}

void save_tensor(const std::filesystem::path& path, std::span<const double> values,
                 std::span<const std::uint32_t> dims, TensorDType dtype) {
  const auto bytes = encode_tensor(values, dims, dtype);
  write_file_atomic(path, bytes);
}

TensorData load_tensor(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open tensor file '" + path.string() + "'");
  std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_tensor(std::as_bytes(std::span<const char>(raw)));
}

void save_coeffs(const ScatteringCoeffs& coeffs, const std::filesystem::path& path) {
  const std::vector<std::uint32_t> dims{static_cast<std::uint32_t>(coeffs.channels()),
                                        static_cast<std::uint32_t>(coeffs.side()),
                                        static_cast<std::uint32_t>(coeffs.side())};
  save_tensor(path, coeffs.values(), dims, TensorDType::Float32);
}

void write_file_atomic(const std::filesystem::path& path, std::span<const std::byte> contents) {
  const auto tmp = temp_sibling(path);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + tmp.string() + "'");
    out.write(reinterpret_cast<const char*>(contents.data()), static_cast<std::streamsize>(contents.size()));
    if (!out) {
      out.close();
      std::filesystem::remove(tmp);
      throw IoError("short write to '" + tmp.string() + "'");
    }
  }
  std::filesystem::rename(tmp, path);
}

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
  write_file_atomic(path, std::as_bytes(std::span<const char>(text.data(), text.size())));
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace scatlite
