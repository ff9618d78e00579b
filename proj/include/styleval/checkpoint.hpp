#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace styleval {

// Versioned checkpoint container shared by the style and aesthetic heads:
// "SVCKPT01" + u32 header length + JSON header + float64 LE payload +
// FNV-1a64 payload checksum. The header carries kind, config, metrics and
// derived ids; the payload is the flat parameter vector, stored bit-exactly
// so reloaded heads reproduce embeddings exactly.
void save_checkpoint(const std::filesystem::path& path, const std::string& kind,
                     const nlohmann::json& header,
                     std::span<const double> payload);

// Throws Error(checkpoint_corrupt) on any mismatch (magic, kind, checksum,
// truncation); Error(io_error) if unreadable.
std::pair<nlohmann::json, std::vector<double>> load_checkpoint(
    const std::filesystem::path& path, const std::string& kind);

}  // namespace styleval
