#pragma once

// Keeps the `needs: rebase` label in sync with mergeability and closes PRs
// whose conflicts stay unresolved after a warning.

#include <map>
#include <optional>
#include <set>
#include <string_view>
#include <vector>

#include "forgebot/action.hpp"
#include "forgebot/engine.hpp"
#include "forgebot/settings.hpp"

namespace forgebot::pr_hygiene {

struct StaleState {
  int pr_number = 0;
  Timestamp labeled_since{};
  std::optional<Timestamp> warned_at;
  bool operator==(const StaleState&) const = default;
};

using StaleStates = std::map<int, StaleState>;

// `conflict` is the sync outcome. When the label is already present but no
// episode is tracked, `label_since` (from the forge timeline) starts it.
std::vector<Action> on_sync_outcome(const PrSnapshot& pr, bool conflict, Timestamp now, StaleStates& states,
                                    std::optional<Timestamp> label_since = std::nullopt);

// Warn once when labeled for >= warn_after, close once when warned for
// >= grace. Running twice at the same `now` emits nothing the second time.
std::vector<Action> stale_scan(StaleStates& states, const RepoId& repo, Timestamp now, const StaleSettings& settings,
                               const Templates& templates);

class PrHygiene final : public Workflow {
 public:
  std::string_view name() const override { return "pr_hygiene"; }
  bool subscribes(EventKind kind) const override;
  std::vector<Action> handle(const Event& event, WorkflowContext& ctx) override;

 private:
  struct RepoState {
    StaleStates stale;
    bool rebuilt = false;
  };

  std::vector<Action> recheck(int number, WorkflowContext& ctx, RepoState& st);
  void rebuild(WorkflowContext& ctx, RepoState& st);

  PerRepo<RepoState> state_;
};

}  // namespace forgebot::pr_hygiene
