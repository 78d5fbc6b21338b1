#include "forgebot/bot.hpp"

#include "forgebot/backport_tracker.hpp"
#include "forgebot/ci_bridge.hpp"
#include "forgebot/merge_service.hpp"
#include "forgebot/minimizer_gateway.hpp"
#include "forgebot/pr_hygiene.hpp"

namespace forgebot {

void install_standard_workflows(Engine& engine) {
  auto candidates = std::make_shared<ci_bridge::CandidateStore>();
  engine.add(std::make_unique<ci_bridge::CiBridge>(candidates));
  engine.add(std::make_unique<pr_hygiene::PrHygiene>());
  engine.add(std::make_unique<merge_service::MergeService>());
  engine.add(std::make_unique<backport_tracker::BackportTracker>());
  engine.add(std::make_unique<minimizer_gateway::MinimizerGateway>(candidates));

  Duration period = StaleSettings{}.scan_period;
  const auto& repos = engine.config().repositories;
  if (!repos.empty()) {
    period = repos.front().stale.scan_period;
    for (const auto& r : repos) period = std::min(period, r.stale.scan_period);
  }
  engine.schedule("pr_hygiene", period);
}

}  // namespace forgebot
