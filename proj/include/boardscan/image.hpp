#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace boardscan {

/// Row-major 8-bit image with 1 (gray) or 3 (RGB) interleaved channels.
class Image {
public:
    Image() = default;
    Image(int width, int height, int channels, std::uint8_t fill = 0);
    Image(int width, int height, int channels, std::vector<std::uint8_t> samples);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    int channels() const noexcept { return channels_; }
    bool empty() const noexcept { return data_.empty(); }

    std::uint8_t& at(int x, int y, int c = 0) {
        return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
    }
    std::uint8_t at(int x, int y, int c = 0) const {
        return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
    }

    std::span<std::uint8_t> samples() noexcept { return data_; }
    std::span<const std::uint8_t> samples() const noexcept { return data_; }

    bool operator==(const Image&) const = default;

private:
    int width_ = 0;
    int height_ = 0;
    int channels_ = 0;
    std::vector<std::uint8_t> data_;
};

/// Single-channel float plane used by the image-processing kernels.
/// Values are on the 0..255 scale unless a routine says otherwise.
struct GrayF {
    int width = 0;
    int height = 0;
    std::vector<float> data;

    GrayF() = default;
    GrayF(int w, int h, float fill = 0.f)
        : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {}

    float& operator()(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
    float operator()(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
};

Image to_gray(const Image& image);
GrayF to_gray_f(const Image& image);
Image to_image(const GrayF& gray);

/// Bilinear sample at pixel-center coordinates; returns `outside` when the
/// point is not within [0, w-1] x [0, h-1].
float sample_bilinear(const GrayF& gray, double x, double y, float outside = 0.f);

GrayF gaussian_blur(const GrayF& gray, double sigma);

/// Box-filter downscale by a real factor (>= 1).
GrayF downscale(const GrayF& gray, double factor);

struct Gradient {
    GrayF gx;
    GrayF gy;
    GrayF magnitude;
};

/// 3x3 Sobel with replicated borders.
Gradient sobel(const GrayF& gray);

/// Reads PNG or JPEG, detected from the file signature. Gray+alpha and RGBA
/// inputs drop the alpha channel.
Image load_image(const std::filesystem::path& path);
void save_png(const Image& image, const std::filesystem::path& path);
void save_jpeg(const Image& image, const std::filesystem::path& path, int quality = 92);

} // namespace boardscan
