#pragma once

#include <filesystem>
#include <string>

#include "ptmark/watermark/key.hpp"

namespace ptmark {

inline constexpr int kKeyFormatVersion = 1;

/// {version, seed, channel, radius, h, w, rings:[{radius, re, im}]} with fixed field order.
std::string key_to_json(const WatermarkKey& key);

/// Parses a key file and regenerates the key from its parameters. The stored ring values
/// act as a checksum: any mismatch throws ConfigError.
WatermarkKey key_from_json(const std::string& text);

/// Writes `<dir>/<fingerprint>.json`, creating `dir` if needed. Returns the file path.
std::filesystem::path save_key(const std::filesystem::path& dir, const WatermarkKey& key);
WatermarkKey load_key(const std::filesystem::path& file);

}  // namespace ptmark
