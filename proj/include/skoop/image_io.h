#pragma once

#include <filesystem>

#include "skoop/image.h"

namespace skoop {

enum class ImageFormat { kPng, kRaw };

/// Raw float layout: "SKIMG1\0\0", u32 LE channels, height, width, then
/// C*H*W f32 LE samples in planar channel-major order.
inline constexpr char kRawMagic[8] = {'S', 'K', 'I', 'M', 'G', '1', '\0', '\0'};
inline constexpr std::size_t kRawHeaderBytes = 20;

/// ".png" -> kPng, ".skimg" / ".raw" -> kRaw; anything else throws IoError.
ImageFormat format_from_path(const std::filesystem::path& path);

/// 8- and 16-bit PNG (gray, gray+alpha, RGB, RGBA, palette) scaled to
/// [0, 1], alpha dropped; raw files are loaded verbatim.
Image load_image(const std::filesystem::path& path);

/// PNG: 8-bit, samples clamped to [0, 1] and rounded half up; 1-4 channels.
/// Raw: lossless at f32 precision.
void save_image(const Image& img, const std::filesystem::path& path,
                ImageFormat format);
void save_image(const Image& img, const std::filesystem::path& path);

/// 8-bit quantization used by the PNG writer.
unsigned char quantize_u8(double v);

}  // namespace skoop
