#pragma once

#include "sulp/sampler.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>

namespace sulp {

/// Write `chain` as a columnar binary file (little-endian doubles, one block
/// per field, column-major) plus a JSON manifest describing the blocks.
/// `extra` is merged into the manifest.
void write_chain(const Chain& chain, const std::filesystem::path& bin_path, const std::filesystem::path& manifest_path,
                 const nlohmann::json& extra = {});

/// Read a chain written by write_chain. Throws DataError on a missing or
/// malformed file.
Chain read_chain(const std::filesystem::path& manifest_path);

/// Per-draw beta as CSV: draw, log_lik, then one column per (shock, h).
void write_beta_csv(const Chain& chain, const std::filesystem::path& path);

}  // namespace sulp
