#pragma once

// Harnesses behind the acceptance binary. Each returns a verdict plus a
// human-readable reason; the unit tests reuse the same harnesses at smaller
// scale.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "forgebot/mock_forge.hpp"
#include "forgebot/settings.hpp"
#include "forge_contract.hpp"

namespace criteria {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::filesystem::path source_dir();
std::filesystem::path scenario_dir();

// The bot config used by the scenarios and the in-code harnesses.
forgebot::BotConfig scenario_config();

// Seeded mock forge and the matching contract fixture.
contract::Fixture mock_fixture();
std::unique_ptr<forgebot::mock::MockForge> make_mock_fixture_forge();

Verdict backport_golden();
// `count` random DAG scenarios starting from `seed`.
Verdict merge_candidates(int count, std::uint64_t seed);
Verdict stale_timing();
Verdict policy_oracle();
Verdict redelivery();
Verdict status_mapping();
Verdict minimizer_round_trip();
Verdict contract_and_hmac();

}  // namespace criteria
