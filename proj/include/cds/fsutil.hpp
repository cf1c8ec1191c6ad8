#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "cds/bytes.hpp"

namespace cds::fsutil {

// Write-to-temp-then-rename so readers never observe a torn file.
void atomic_write(const std::filesystem::path& path, ByteView contents);
void atomic_write(const std::filesystem::path& path, std::string_view contents);

std::optional<Bytes> read_file(const std::filesystem::path& path);
std::optional<std::string> read_text_file(const std::filesystem::path& path);

// True iff the string is exactly `digits` lowercase hex characters. Gate for
// identifiers that become path components.
bool is_hex_id(std::string_view s, std::size_t digits);

}  // namespace cds::fsutil
