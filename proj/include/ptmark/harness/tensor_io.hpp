#pragma once

#include <filesystem>

#include "ptmark/diffusion/image.hpp"
#include "ptmark/numerics/latent.hpp"

namespace ptmark {

/// Binary tensor file: "PTT1", u32 rank (3 for latents, 2 for images), u64 dims,
/// then little-endian IEEE doubles in row-major order. Lossless.
void save_latent(const std::filesystem::path& path, const Latent& z);
Latent load_latent(const std::filesystem::path& path);
void save_image(const std::filesystem::path& path, const Image& x);
Image load_image(const std::filesystem::path& path);

/// 8-bit binary PGM (P5). Reading also accepts 16-bit maxval.
void write_pgm(const std::filesystem::path& path, const Image& x);
Image read_pgm(const std::filesystem::path& path);

/// .pgm goes through read_pgm, anything else through load_image.
Image read_any_image(const std::filesystem::path& path);

}  // namespace ptmark
