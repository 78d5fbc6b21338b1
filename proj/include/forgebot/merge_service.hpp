#pragma once

// Merge on command: `@<bot> merge now` in a PR comment checks the whole
// policy, reports every unmet requirement at once, or merges with a
// templated, signed merge commit.

#include <cstdint>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "forgebot/action.hpp"
#include "forgebot/engine.hpp"
#include "forgebot/settings.hpp"

namespace forgebot::merge_service {

// Declaration order is the reporting order.
enum class ViolationCode {
  NotMaintainer,
  HasNeedsLabel,
  NoKindLabel,
  NoMilestone,
  NoAssignee,
  InsufficientReviews,
  ChangesRequested,
  WrongBase,
  CiNotGreen,
  Conflict,
  SelfMerge,
};

std::string_view to_string(ViolationCode c);

struct Violation {
  ViolationCode code;
  std::string detail;
  bool operator==(const Violation&) const = default;
};

// True iff some line, trimmed, is `@<handle> merge now`. The handle must
// match exactly; "merge now" is case-insensitive.
bool parse_merge_command(std::string_view body, std::string_view bot_handle);

std::vector<Violation> evaluate_policy(const PrSnapshot& pr, std::string_view commenter, bool is_member,
                                       const MergePolicy& policy);

// Fills {number} and {title}; a line containing {assignees} is repeated once
// per assignee (sorted) and dropped when there are none.
std::string merge_message(const PrSnapshot& pr, std::string_view tmpl);

std::vector<Action> execute(const PrSnapshot& pr, std::string_view tmpl);

std::string violation_comment(std::string_view commenter, const std::vector<Violation>& violations);

// (org, team) for a policy's authorized_team; a bare team name belongs to
// the repository owner.
std::pair<std::string, std::string> team_of(const MergePolicy& policy, const RepoId& repo);

class MergeService final : public Workflow {
 public:
  std::string_view name() const override { return "merge_service"; }
  bool subscribes(EventKind kind) const override;
  std::vector<Action> handle(const Event& event, WorkflowContext& ctx) override;
  std::vector<Action> on_failed(const Action& action, const ActionResult& result, WorkflowContext& ctx) override;

 private:
  // (comment id, sha256 of the normalized command line)
  PerRepo<std::set<std::pair<std::int64_t, std::string>>> ledger_;
};

}  // namespace forgebot::merge_service
