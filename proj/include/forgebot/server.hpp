#pragma once

#include <cstddef>
#include <string>

#include "forgebot/settings.hpp"

namespace forgebot {

// Splits "host:port"; throws InvalidInput on a missing or bad port.
std::pair<std::string, int> parse_listen(const std::string& listen);

// Runs the webhook server against the live forge until SIGTERM or SIGINT,
// then stops accepting, drains the queue and returns 0. Returns non-zero
// when the listen address cannot be bound.
int serve(const BotConfig& config, std::size_t workers);

}  // namespace forgebot
