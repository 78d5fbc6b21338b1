#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace forgebot {

struct BotError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed value handed to a constructor or parser.
struct InvalidInput : BotError {
  using BotError::BotError;
};

struct NotFound : BotError {
  using BotError::BotError;
};

// Misconfiguration (unknown team, unknown base branch, ...). Distinct from a
// negative answer.
struct ConfigurationError : BotError {
  using BotError::BotError;
};

// Transport failure; callers may retry.
struct TransportError : BotError {
  using BotError::BotError;
};

struct NotSupported : BotError {
  using BotError::BotError;
};

// Configuration file rejected. Carries every problem found in one pass.
struct ConfigErrors : BotError {
  explicit ConfigErrors(std::vector<std::string> errs)
      : BotError(join(errs)), errors(std::move(errs)) {}

  std::vector<std::string> errors;

 private:
  static std::string join(const std::vector<std::string>& errs) {
    std::string out = "invalid configuration:";
    for (const auto& e : errs) out += "\n  - " + e;
    return out;
  }
};

}  // namespace forgebot
