#pragma once

// File and directory loaders for the text formats.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "athena/background_filter.hpp"
#include "athena/signature_gen.hpp"
#include "athena/traffic_model.hpp"

namespace athena {

/// Errors: Io when the file cannot be read.
std::string read_text_file(const std::filesystem::path& path);
std::vector<std::uint8_t> read_binary_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

/// Every `*.sig` file in `dir`, in file-name order. Errors: Io, and the
/// parse errors of `parse_signature` (message prefixed with the file name).
SignatureSet load_signatures(const std::filesystem::path& dir);

/// Captures stored as `<activity>.<seq>.log` canonical logs, in file-name
/// order, background-filtered with `rules`. The device label is the device
/// address of the first packet. Errors: Io, parse errors.
std::vector<LabeledCapture> load_captures(const std::filesystem::path& dir,
                                          const BackgroundRuleSet& rules = default_rules());

}  // namespace athena
