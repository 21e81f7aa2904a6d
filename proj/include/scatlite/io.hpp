#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "scatlite/tensor.hpp"

namespace scatlite {

// ---------------------------------------------------------------------------
// PNG
// ---------------------------------------------------------------------------

/// Reads an 8- or 16-bit grayscale or RGB PNG (alpha is dropped) with values
/// scaled to [0, 1]. When `grid_size` is given the image is centre-cropped to
/// a square and bilinearly resampled (pixel-centre aligned) to that side.
ImageTensor load_image(const std::filesystem::path& path, std::optional<std::size_t> grid_size = std::nullopt);

/// Writes C = 1 (gray) or C = 3 (RGB) as 8-bit PNG, clipping to [0, 1].
void save_png(const ImageTensor& image, const std::filesystem::path& path);

// Centre crop to a square followed by bilinear resampling with half-pixel
// centres; exposed for testing.
ImageTensor crop_and_resize(const ImageTensor& image, std::size_t side);

// ---------------------------------------------------------------------------
// SCT1 tensor files
//
//   "SCT1" | version u16 | dtype u8 | rank u8 | dims u32[rank] | payload | crc32 u32
//
// All integers and payload values little-endian; the CRC covers the payload.
// ---------------------------------------------------------------------------

enum class TensorDType : std::uint8_t { Float32 = 0, Float64 = 1 };

inline constexpr std::uint16_t kTensorVersion = 1;

struct TensorData {
  TensorDType dtype = TensorDType::Float32;
  std::vector<std::uint32_t> dims;
  std::vector<double> values;  // widened to double in memory
};

void save_tensor(const std::filesystem::path& path, std::span<const double> values,
                 std::span<const std::uint32_t> dims, TensorDType dtype = TensorDType::Float32);
TensorData load_tensor(const std::filesystem::path& path);

// Serialized bytes of a tensor; save_tensor writes exactly these.
std::vector<std::byte> encode_tensor(std::span<const double> values, std::span<const std::uint32_t> dims,
                                     TensorDType dtype);
TensorData decode_tensor(std::span<const std::byte> bytes);

// Coefficients as a float32 [channels, side, side] tensor.
void save_coeffs(const ScatteringCoeffs& coeffs, const std::filesystem::path& path);

std::uint32_t crc32(std::span<const std::byte> bytes);

// Writes `contents` to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::span<const std::byte> contents);
void write_text_atomic(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace scatlite
