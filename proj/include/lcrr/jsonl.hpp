#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

namespace lcrr::jsonl {

// Calls `fn` for each non-blank line parsed as JSON. Malformed lines raise
// InputError with file and line number.
void for_each(const std::filesystem::path& path,
              const std::function<void(const nlohmann::ordered_json&)>& fn);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

// Hex SHA-256 digest.
std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::filesystem::path& path);

}  // namespace lcrr::jsonl
