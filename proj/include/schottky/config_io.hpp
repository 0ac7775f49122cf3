#pragma once

#include <stdexcept>
#include <string>

#include "schottky/config.hpp"
#include "schottky/report.hpp"

namespace schottky {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Parses the JSON configuration text; errors name the line/column or the field path.
SchottkyConfig parse_config(const std::string& text, const std::string& source = "<memory>");
SchottkyConfig load_config(const std::string& path);

Json config_to_json(const SchottkyConfig& config);
std::string serialize_config(const SchottkyConfig& config);
void save_config(const SchottkyConfig& config, const std::string& path);

std::string read_text_file(const std::string& path);

}  // namespace schottky
