#pragma once

#include "forgebot/engine.hpp"

namespace forgebot {

// Registers the five workflows in their fixed order (ci_bridge, pr_hygiene,
// merge_service, backport_tracker, minimizer_gateway) and schedules the
// stale scan at the shortest scan period among the configured repositories.
void install_standard_workflows(Engine& engine);

}  // namespace forgebot
