#pragma once

// JSON configuration file. Every problem found is reported at once through
// ConfigErrors; missing fields take their defaults.

#include <filesystem>
#include <string>
#include <string_view>

#include "forgebot/settings.hpp"
#include "json.hpp"

namespace forgebot {

BotConfig parse_config(const nlohmann::json& doc);
BotConfig parse_config_text(std::string_view text);

// Throws ConfigErrors naming the path when the file cannot be read.
BotConfig load_config(const std::filesystem::path& path);

// Effective configuration, defaults included. parse_config(config_to_json(c))
// == c for every valid c.
nlohmann::json config_to_json(const BotConfig& config);

// Reads the webhook secret named by the config from the environment; empty
// when unset.
std::string webhook_secret(const BotConfig& config);

}  // namespace forgebot
