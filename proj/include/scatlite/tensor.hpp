#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace scatlite {

/// Real-valued C x H x W signal, row-major per channel.
class ImageTensor {
 public:
  ImageTensor() = default;
  ImageTensor(std::size_t channels, std::size_t height, std::size_t width, double fill = 0.0)
      : channels_(channels), height_(height), width_(width), data_(channels * height * width, fill) {}

  std::size_t channels() const { return channels_; }
  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }
  std::size_t plane_size() const { return height_ * width_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& at(std::size_t c, std::size_t y, std::size_t x) { return data_[(c * height_ + y) * width_ + x]; }
  double at(std::size_t c, std::size_t y, std::size_t x) const { return data_[(c * height_ + y) * width_ + x]; }

  std::span<double> channel(std::size_t c) { return {data_.data() + c * plane_size(), plane_size()}; }
  std::span<const double> channel(std::size_t c) const { return {data_.data() + c * plane_size(), plane_size()}; }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  bool same_shape(const ImageTensor& o) const {
    return channels_ == o.channels_ && height_ == o.height_ && width_ == o.width_;
  }

 private:
  std::size_t channels_ = 0;
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<double> data_;
};

/// First-order scattering output.
///
/// Per input channel the block holds `per_input()` maps of side `side()`:
/// index 0 is the low-pass average, then band-pass moduli ordered with the
/// scale j ascending and, within a scale, the angle index ascending.
class ScatteringCoeffs {
 public:
  ScatteringCoeffs() = default;
  ScatteringCoeffs(std::size_t input_channels, std::size_t per_input, std::size_t side, std::string config_hash)
      : input_channels_(input_channels),
        per_input_(per_input),
        side_(side),
        config_hash_(std::move(config_hash)),
        data_(input_channels * per_input * side * side, 0.0) {}

  std::size_t input_channels() const { return input_channels_; }
  std::size_t per_input() const { return per_input_; }
  std::size_t channels() const { return input_channels_ * per_input_; }
  std::size_t side() const { return side_; }
  std::size_t map_size() const { return side_ * side_; }
  std::size_t size() const { return data_.size(); }
  const std::string& config_hash() const { return config_hash_; }

  // Channel index in the flat layout for (input channel, path); path 0 is the
  // low-pass, path 1 + j * angles + theta the band-pass (j, theta).
  std::size_t channel_index(std::size_t input_channel, std::size_t path) const {
    return input_channel * per_input_ + path;
  }

  std::span<double> map(std::size_t channel) { return {data_.data() + channel * map_size(), map_size()}; }
  std::span<const double> map(std::size_t channel) const {
    return {data_.data() + channel * map_size(), map_size()};
  }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  bool same_shape(const ScatteringCoeffs& o) const {
    return input_channels_ == o.input_channels_ && per_input_ == o.per_input_ && side_ == o.side_;
  }

 private:
  std::size_t input_channels_ = 0;
  std::size_t per_input_ = 0;
  std::size_t side_ = 0;
  std::string config_hash_;
  std::vector<double> data_;
};

// Euclidean norm and inner product over flat value ranges.
double l2_norm(std::span<const double> v);
double dot(std::span<const double> a, std::span<const double> b);

}  // namespace scatlite
