#pragma once

// Tracks backports on a project board: merged PRs whose milestone asks for a
// backport get a card in the request column, a push of the backport to the
// release branch moves it to the shipped column, and a release manager
// deleting a pending card rejects the backport.

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "forgebot/action.hpp"
#include "forgebot/engine.hpp"
#include "forgebot/errors.hpp"
#include "forgebot/settings.hpp"

namespace forgebot::backport_tracker {

struct BackportSpec {
  std::string release_branch;
  std::string request_column = "Backport requested";
  std::string shipped_column = "Shipped";
  // Milestone given to rejected PRs; none means the milestone is cleared.
  std::optional<int> rejection_milestone;

  bool operator==(const BackportSpec&) const = default;
};

struct DirectiveError : InvalidInput {
  using InvalidInput::InvalidInput;
};

// Looks for a line
//   <keyword>: backport to <branch> [(request inclusion column: <name>;
//       shipped column: <name>; rejection milestone: <number>)]
// Options may appear in any order and each is optional. Throws DirectiveError
// when the keyword line is there but malformed.
std::optional<BackportSpec> parse_milestone_metadata(std::string_view description, std::string_view keyword = "coqbot",
                                                     const BackportSettings& defaults = {});

// PR number a pushed commit ships: `Merge PR #<n>` titles, or a cherry-pick
// trailer naming a known PR merge commit.
std::optional<int> shipped_pr(std::string_view message, const std::map<Sha, int>& merge_commits);

class BackportTracker final : public Workflow {
 public:
  std::string_view name() const override { return "backport_tracker"; }
  bool subscribes(EventKind kind) const override;
  std::vector<Action> handle(const Event& event, WorkflowContext& ctx) override;
  std::vector<Action> on_failed(const Action& action, const ActionResult& result, WorkflowContext& ctx) override;

 private:
  struct RepoState {
    bool loaded = false;
    std::map<int, std::string> cards;  // pr -> column
    std::map<Sha, int> merge_commits;
    std::set<int> reported_milestones;
  };

  std::optional<BackportSpec> spec_for(const PrSnapshot& pr, WorkflowContext& ctx, RepoState& st,
                                       std::vector<Action>& out);
  void load(WorkflowContext& ctx, RepoState& st);
  std::vector<Action> on_pr_merged(const Event& event, const PrClosed& e, WorkflowContext& ctx, RepoState& st);
  std::vector<Action> on_release_push(const PushToBranch& e, WorkflowContext& ctx, RepoState& st);
  std::vector<Action> on_card_removed(const Event& event, const CardRemoved& e, WorkflowContext& ctx, RepoState& st);

  PerRepo<RepoState> state_;
};

}  // namespace forgebot::backport_tracker
