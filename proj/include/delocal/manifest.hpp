#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace delocal {

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::string& path);

struct OutputRecord {
  std::string file;  // relative to the run directory
  std::string sha256;
  std::size_t bytes = 0;
};

/// Writes `content` to dir/name and returns its record. Payloads are written
/// in binary mode so checksums do not depend on the platform's newline.
OutputRecord write_output(const std::string& dir, const std::string& name, const std::string& content);

/// Deterministic pretty JSON text with a trailing newline.
std::string json_text(const nlohmann::json& j);

}  // namespace delocal
