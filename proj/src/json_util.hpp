#pragma once

// Internal helpers for reading JSON configuration with useful diagnostics.

#include "qnd/errors.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>

namespace qnd::detail {

inline nlohmann::json parse_json(std::string_view text, std::string_view what) {
  try {
    return nlohmann::json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::parse_error& e) {
    std::size_t line = 1;
    std::size_t column = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    throw ConfigError(std::string(what) + ": syntax error at line " + std::to_string(line) +
                      ", column " + std::to_string(column) + ": " + e.what());
  }
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open " + path.string());
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline const nlohmann::json& require_key(const nlohmann::json& obj, const std::string& key,
                                         std::string_view what) {
  if (!obj.is_object() || !obj.contains(key)) {
    throw ConfigError(std::string(what) + ": missing key \"" + key + "\"");
  }
  return obj.at(key);
}

inline double number_at(const nlohmann::json& obj, const std::string& key,
                        std::string_view what) {
  const auto& v = require_key(obj, key, what);
  if (!v.is_number()) {
    throw ConfigError(std::string(what) + ": key \"" + key + "\" must be a number");
  }
  return v.get<double>();
}

inline double number_or(const nlohmann::json& obj, const std::string& key, double fallback,
                        std::string_view what) {
  if (!obj.contains(key)) return fallback;
  return number_at(obj, key, what);
}

}  // namespace qnd::detail
