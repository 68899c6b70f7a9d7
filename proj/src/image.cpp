#include "boardscan/image.hpp"

#include "boardscan/error.hpp"

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <fstream>
#include <memory>

#include <jpeglib.h>
#include <png.h>

namespace boardscan {

const char* to_string(ErrorKind kind) noexcept {
    switch (kind) {
    case ErrorKind::InvalidArgument: return "invalid argument";
    case ErrorKind::Geometry: return "geometry";
    case ErrorKind::DetectionFailure: return "detection failure";
    case ErrorKind::Classification: return "classification";
    case ErrorKind::Parse: return "parse";
    case ErrorKind::Io: return "io";
    }
    return "unknown";
}

Image::Image(int width, int height, int channels, std::uint8_t fill)
    : width_(width), height_(height), channels_(channels) {
    if (width < 1 || height < 1 || (channels != 1 && channels != 3)) {
        throw Error(ErrorKind::InvalidArgument, "image dimensions must be >= 1 with 1 or 3 channels");
    }
    data_.assign(static_cast<std::size_t>(width) * height * channels, fill);
}

Image::Image(int width, int height, int channels, std::vector<std::uint8_t> samples)
    : width_(width), height_(height), channels_(channels), data_(std::move(samples)) {
    if (width < 1 || height < 1 || (channels != 1 && channels != 3)) {
        throw Error(ErrorKind::InvalidArgument, "image dimensions must be >= 1 with 1 or 3 channels");
    }
    if (data_.size() != static_cast<std::size_t>(width) * height * channels) {
        throw Error(ErrorKind::InvalidArgument, "sample buffer length does not match width*height*channels");
    }
}

namespace {

std::uint8_t luma(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    // ITU-R BT.601 weights in fixed point.
    return static_cast<std::uint8_t>((299 * r + 587 * g + 114 * b + 500) / 1000);
}

} // namespace

Image to_gray(const Image& image) {
    if (image.channels() == 1) {
        return image;
    }
    Image out(image.width(), image.height(), 1);
    for (int y = 0; y < image.height(); ++y) {
        for (int x = 0; x < image.width(); ++x) {
            out.at(x, y) = luma(image.at(x, y, 0), image.at(x, y, 1), image.at(x, y, 2));
        }
    }
    return out;
}

GrayF to_gray_f(const Image& image) {
    GrayF out(image.width(), image.height());
    if (image.channels() == 1) {
        auto s = image.samples();
        std::transform(s.begin(), s.end(), out.data.begin(), [](std::uint8_t v) { return float(v); });
        return out;
    }
    for (int y = 0; y < image.height(); ++y) {
        for (int x = 0; x < image.width(); ++x) {
            out(x, y) = 0.299f * image.at(x, y, 0) + 0.587f * image.at(x, y, 1) + 0.114f * image.at(x, y, 2);
        }
    }
    return out;
}

Image to_image(const GrayF& gray) {
    Image out(gray.width, gray.height, 1);
    auto s = out.samples();
    for (std::size_t i = 0; i < gray.data.size(); ++i) {
        s[i] = static_cast<std::uint8_t>(std::clamp(std::lround(gray.data[i]), 0L, 255L));
    }
    return out;
}

float sample_bilinear(const GrayF& gray, double x, double y, float outside) {
    if (!(x >= 0.0 && y >= 0.0 && x <= gray.width - 1 && y <= gray.height - 1)) {
        return outside;
    }
    const int x0 = std::min(static_cast<int>(x), gray.width - 1);
    const int y0 = std::min(static_cast<int>(y), gray.height - 1);
    const int x1 = std::min(x0 + 1, gray.width - 1);
    const int y1 = std::min(y0 + 1, gray.height - 1);
    const float fx = static_cast<float>(x - x0);
    const float fy = static_cast<float>(y - y0);
    const float top = gray(x0, y0) + fx * (gray(x1, y0) - gray(x0, y0));
    const float bottom = gray(x0, y1) + fx * (gray(x1, y1) - gray(x0, y1));
    return top + fy * (bottom - top);
}

GrayF gaussian_blur(const GrayF& gray, double sigma) {
    if (sigma <= 0.0) {
        return gray;
    }
    const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    std::vector<float> kernel(2 * radius + 1);
    float sum = 0.f;
    for (int i = -radius; i <= radius; ++i) {
        kernel[i + radius] = static_cast<float>(std::exp(-(i * i) / (2.0 * sigma * sigma)));
        sum += kernel[i + radius];
    }
    for (auto& k : kernel) {
        k /= sum;
    }
    const int w = gray.width;
    const int h = gray.height;
    GrayF tmp(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            float acc = 0.f;
            for (int i = -radius; i <= radius; ++i) {
                acc += kernel[i + radius] * gray(std::clamp(x + i, 0, w - 1), y);
            }
            tmp(x, y) = acc;
        }
    }
    GrayF out(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            float acc = 0.f;
            for (int i = -radius; i <= radius; ++i) {
                acc += kernel[i + radius] * tmp(x, std::clamp(y + i, 0, h - 1));
            }
            out(x, y) = acc;
        }
    }
    return out;
}

GrayF downscale(const GrayF& gray, double factor) {
    if (factor <= 1.0) {
        return gray;
    }
    const int w = std::max(1, static_cast<int>(std::lround(gray.width / factor)));
    const int h = std::max(1, static_cast<int>(std::lround(gray.height / factor)));
    const double sx = static_cast<double>(gray.width) / w;
    const double sy = static_cast<double>(gray.height) / h;
    GrayF out(w, h);
    for (int y = 0; y < h; ++y) {
        const int y0 = static_cast<int>(y * sy);
        const int y1 = std::max(y0 + 1, static_cast<int>((y + 1) * sy));
        for (int x = 0; x < w; ++x) {
            const int x0 = static_cast<int>(x * sx);
            const int x1 = std::max(x0 + 1, static_cast<int>((x + 1) * sx));
            float acc = 0.f;
            for (int yy = y0; yy < std::min(y1, gray.height); ++yy) {
                for (int xx = x0; xx < std::min(x1, gray.width); ++xx) {
                    acc += gray(xx, yy);
                }
            }
            out(x, y) = acc / static_cast<float>((std::min(y1, gray.height) - y0) * (std::min(x1, gray.width) - x0));
        }
    }
    return out;
}

Gradient sobel(const GrayF& gray) {
    const int w = gray.width;
    const int h = gray.height;
    Gradient g{GrayF(w, h), GrayF(w, h), GrayF(w, h)};
    auto px = [&](int x, int y) { return gray(std::clamp(x, 0, w - 1), std::clamp(y, 0, h - 1)); };
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const float gx = (px(x + 1, y - 1) + 2 * px(x + 1, y) + px(x + 1, y + 1))
                           - (px(x - 1, y - 1) + 2 * px(x - 1, y) + px(x - 1, y + 1));
            const float gy = (px(x - 1, y + 1) + 2 * px(x, y + 1) + px(x + 1, y + 1))
                           - (px(x - 1, y - 1) + 2 * px(x, y - 1) + px(x + 1, y - 1));
            g.gx(x, y) = gx;
            g.gy(x, y) = gy;
            g.magnitude(x, y) = std::sqrt(gx * gx + gy * gy);
        }
    }
    return g;
}

// ---------------------------------------------------------------------------
// File I/O

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
    FilePtr f(std::fopen(path.c_str(), mode));
    if (!f) {
        throw Error(ErrorKind::Io, "cannot open " + path.string());
    }
    return f;
}

Image load_png(const std::filesystem::path& path) {
    png_image img{};
    img.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&img, path.c_str())) {
        throw Error(ErrorKind::Io, "cannot decode PNG " + path.string() + ": " + img.message);
    }
    const bool color = (img.format & PNG_FORMAT_FLAG_COLOR) != 0;
    img.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    const int channels = color ? 3 : 1;
    std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(img));
    if (!png_image_finish_read(&img, nullptr, buf.data(), 0, nullptr)) {
        png_image_free(&img);
        throw Error(ErrorKind::Io, "cannot decode PNG " + path.string() + ": " + img.message);
    }
    return Image(static_cast<int>(img.width), static_cast<int>(img.height), channels, std::move(buf));
}

struct JpegErrorManager {
    jpeg_error_mgr base;
    std::jmp_buf jump;
    char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr cinfo) {
    auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
    (*cinfo->err->format_message)(cinfo, err->message);
    std::longjmp(err->jump, 1);
}

// No non-trivial locals: libjpeg errors longjmp out of here.
bool decode_jpeg(std::FILE* file, std::vector<std::uint8_t>& out, int& width, int& height,
                 int& channels, char* message) {
    jpeg_decompress_struct cinfo;
    JpegErrorManager err;
    cinfo.err = jpeg_std_error(&err.base);
    err.base.error_exit = jpeg_error_exit;
    if (setjmp(err.jump)) {
        std::snprintf(message, JMSG_LENGTH_MAX, "%s", err.message);
        jpeg_destroy_decompress(&cinfo);
        return false;
    }
    jpeg_create_decompress(&cinfo);
    jpeg_stdio_src(&cinfo, file);
    jpeg_read_header(&cinfo, TRUE);
    cinfo.out_color_space = cinfo.num_components == 1 ? JCS_GRAYSCALE : JCS_RGB;
    jpeg_start_decompress(&cinfo);
    width = static_cast<int>(cinfo.output_width);
    height = static_cast<int>(cinfo.output_height);
    channels = cinfo.output_components;
    out.resize(static_cast<std::size_t>(width) * height * channels);
    while (cinfo.output_scanline < cinfo.output_height) {
        JSAMPROW row = out.data() + static_cast<std::size_t>(cinfo.output_scanline) * width * channels;
        jpeg_read_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_decompress(&cinfo);
    jpeg_destroy_decompress(&cinfo);
    return true;
}

Image load_jpeg(const std::filesystem::path& path) {
    auto file = open_file(path, "rb");
    std::vector<std::uint8_t> buf;
    int w = 0;
    int h = 0;
    int c = 0;
    char message[JMSG_LENGTH_MAX] = {};
    if (!decode_jpeg(file.get(), buf, w, h, c, message)) {
        throw Error(ErrorKind::Io, "cannot decode JPEG " + path.string() + ": " + message);
    }
    return Image(w, h, c, std::move(buf));
}

bool encode_jpeg(std::FILE* file, const std::uint8_t* data, int width, int height, int channels,
                 int quality, char* message) {
    jpeg_compress_struct cinfo;
    JpegErrorManager err;
    cinfo.err = jpeg_std_error(&err.base);
    err.base.error_exit = jpeg_error_exit;
    if (setjmp(err.jump)) {
        std::snprintf(message, JMSG_LENGTH_MAX, "%s", err.message);
        jpeg_destroy_compress(&cinfo);
        return false;
    }
    jpeg_create_compress(&cinfo);
    jpeg_stdio_dest(&cinfo, file);
    cinfo.image_width = static_cast<JDIMENSION>(width);
    cinfo.image_height = static_cast<JDIMENSION>(height);
    cinfo.input_components = channels;
    cinfo.in_color_space = channels == 1 ? JCS_GRAYSCALE : JCS_RGB;
    jpeg_set_defaults(&cinfo);
    jpeg_set_quality(&cinfo, quality, TRUE);
    jpeg_start_compress(&cinfo, TRUE);
    while (cinfo.next_scanline < cinfo.image_height) {
        auto* row = const_cast<JSAMPROW>(data + static_cast<std::size_t>(cinfo.next_scanline) * width * channels);
        jpeg_write_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_compress(&cinfo);
    jpeg_destroy_compress(&cinfo);
    return true;
}

} // namespace

Image load_image(const std::filesystem::path& path) {
    unsigned char magic[8] = {};
    {
        std::ifstream in(path, std::ios::binary);
        if (!in) {
            throw Error(ErrorKind::Io, "cannot open " + path.string());
        }
        in.read(reinterpret_cast<char*>(magic), sizeof magic);
        if (in.gcount() < 3) {
            throw Error(ErrorKind::Io, "file too short to be an image: " + path.string());
        }
    }
    if (png_sig_cmp(magic, 0, 8) == 0) {
        return load_png(path);
    }
    if (magic[0] == 0xFF && magic[1] == 0xD8 && magic[2] == 0xFF) {
        return load_jpeg(path);
    }
    throw Error(ErrorKind::Io, "unsupported image format: " + path.string());
}

void save_png(const Image& image, const std::filesystem::path& path) {
    png_image img{};
    img.version = PNG_IMAGE_VERSION;
    img.width = static_cast<png_uint_32>(image.width());
    img.height = static_cast<png_uint_32>(image.height());
    img.format = image.channels() == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    if (!png_image_write_to_file(&img, path.c_str(), 0, image.samples().data(), 0, nullptr)) {
        throw Error(ErrorKind::Io, "cannot write PNG " + path.string() + ": " + img.message);
    }
}

void save_jpeg(const Image& image, const std::filesystem::path& path, int quality) {
    auto file = open_file(path, "wb");
    char message[JMSG_LENGTH_MAX] = {};
    if (!encode_jpeg(file.get(), image.samples().data(), image.width(), image.height(),
                     image.channels(), quality, message)) {
        throw Error(ErrorKind::Io, "cannot write JPEG " + path.string() + ": " + message);
    }
}

} // namespace boardscan
