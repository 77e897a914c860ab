#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "evfuse/depth.hpp"
#include "evfuse/image.hpp"

namespace evfuse {

using Rgba = std::array<std::uint8_t, 4>;

// PFM, single channel, little-endian (negative scale), rows bottom to top.
void WritePfm(const std::string& path, const Image<float>& image);
Image<float> ReadPfm(const std::string& path);

void WritePngGray(const std::string& path, const Image<std::uint8_t>& image);
void WritePngRgba(const std::string& path, const Image<Rgba>& image);

// Jet colormap, s in [0, 1] from blue to red.
Rgba Jet(double s);

// Red = near, blue = far over [z_min, z_max]; unmasked pixels transparent.
Image<Rgba> ColorizeDepth(const DepthResult& result, double z_min, double z_max);
// Negated grayscale: 255 - 255 * c / max(c), so strong evidence is dark.
Image<std::uint8_t> NegatedConfidence(const Image<float>& confidence);
// Jet-coloured map normalized by its own maximum.
Image<Rgba> PseudoColor(const Image<float>& image);

void WritePlyAscii(const std::string& path, const std::vector<Eigen::Vector3d>& points);

}  // namespace evfuse
