#pragma once

// Line-oriented scenario scripts replayed against the mock forge through the
// real ingress path (sign, verify, dedup, decode).
//
//   forgebot-scenario 1
//   config <bot-config.json>
//   seed <seed.json>
//   deliver <payload.json>
//   advance <duration>
//   capture <symbol> <repo> <branch>      (binds the branch's current head)
//   runner-fail <script substring> <diagnostic>
//   expect-action <pattern>
//   expect-none <pattern>
//   expect-state <predicate> <args...>
//
// Paths are relative to the script. Payload files are envelopes
//   {"provider": "github", "event": "pull_request", "delivery": "...", "body": {...}}
// in which string values may contain {{symbol}}, {{branch:<repo>:<branch>}}
// and {{now}} placeholders.
//
// Patterns match rendered action lines (`Kind field="v" ... -> STATUS`);
// `*` matches any run of characters and the pattern may match anywhere in
// the line. expect-action consumes the first matching action after the
// previous match; expect-none checks the actions after the previous match.

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "forgebot/engine.hpp"
#include "forgebot/mock_forge.hpp"

namespace forgebot {

struct ScenarioOptions {
  // Deliver every webhook twice with the same delivery id.
  bool duplicate_deliveries = false;
  std::ostream* log = nullptr;
};

struct ScenarioResult {
  bool ok = true;
  std::vector<std::string> failures;
  std::vector<DispatchRecord> records;
  std::vector<std::string> action_lines;
  std::string transcript;  // rendered records plus the final state digest
  std::string digest;
  mock::ForgeState final_state;
  std::size_t deliveries = 0;
};

std::string action_line(const AppliedAction& a);

// Glob with `*`, unanchored.
bool pattern_matches(std::string_view pattern, std::string_view line);

ScenarioResult run_scenario(const std::filesystem::path& script, const ScenarioOptions& options = {});
ScenarioResult run_scenario_text(const std::string& text, const std::filesystem::path& base_dir,
                                 const ScenarioOptions& options = {}, const std::string& name = "scenario");

}  // namespace forgebot
