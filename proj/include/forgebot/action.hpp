#pragma once

// State-changing requests. Actions are the only way the bot affects a forge;
// each names exactly one target repository.

#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "forgebot/commit_graph.hpp"
#include "forgebot/model.hpp"

namespace forgebot {

struct AddLabel {
  RepoId repo;
  int number = 0;
  std::string label;
  bool operator==(const AddLabel&) const = default;
};

struct RemoveLabel {
  RepoId repo;
  int number = 0;
  std::string label;
  bool operator==(const RemoveLabel&) const = default;
};

struct PostComment {
  RepoId repo;
  int number = 0;
  std::string body;
  bool operator==(const PostComment&) const = default;
};

struct UpdateComment {
  RepoId repo;
  std::int64_t comment_id = 0;
  std::string body;
  bool operator==(const UpdateComment&) const = default;
};

struct ClosePr {
  RepoId repo;
  int number = 0;
  bool operator==(const ClosePr&) const = default;
};

// milestone == nullopt clears the milestone.
struct SetMilestone {
  RepoId repo;
  int number = 0;
  std::optional<int> milestone;
  bool operator==(const SetMilestone&) const = default;
};

// Always a merge commit; never squash, rebase or fast-forward.
struct MergePr {
  RepoId repo;
  int number = 0;
  std::string message;
  bool sign = true;
  bool operator==(const MergePr&) const = default;
};

// `objects` are the commits the receiving side may lack (what a git push
// would transfer).
struct PushBranch {
  RepoId repo;
  std::string branch;
  Sha sha;
  bool force = false;
  std::vector<ToyCommit> objects;
  bool operator==(const PushBranch&) const = default;
};

struct DeleteBranch {
  RepoId repo;
  std::string branch;
  bool operator==(const DeleteBranch&) const = default;
};

enum class CheckConclusion { Success, Failure, Cancelled };
std::string_view to_string(CheckConclusion c);

struct CreateCheckRun {
  RepoId repo;
  Sha sha;
  std::string name;
  CheckConclusion conclusion = CheckConclusion::Success;
  std::string summary;
  std::vector<std::pair<std::string, std::string>> links;  // (title, url)
  bool operator==(const CreateCheckRun&) const = default;
};

enum class StatusState { Pending, Success, Failure, Error };
std::string_view to_string(StatusState s);

struct SetCommitStatus {
  RepoId repo;
  Sha sha;
  std::string context;
  StatusState state = StatusState::Pending;
  std::string target_url;
  bool operator==(const SetCommitStatus&) const = default;
};

struct AddCardToColumn {
  RepoId repo;
  int board = 0;
  std::string column;
  int pr_number = 0;
  bool operator==(const AddCardToColumn&) const = default;
};

struct MoveCard {
  RepoId repo;
  int board = 0;
  int pr_number = 0;
  std::string column;
  bool operator==(const MoveCard&) const = default;
};

// Submitted to the job runner, not the forge. The repo is the origin of the
// request.
struct DispatchJob {
  RepoId repo;
  std::string token;
  std::string script;
  bool operator==(const DispatchJob&) const = default;
};

using Action = std::variant<AddLabel, RemoveLabel, PostComment, UpdateComment, ClosePr, SetMilestone, MergePr,
                            PushBranch, DeleteBranch, CreateCheckRun, SetCommitStatus, AddCardToColumn, MoveCard,
                            DispatchJob>;

std::string_view action_kind(const Action& a);
const RepoId& action_repo(const Action& a);

// Ordered (field, value) pairs describing an action, excluding the kind.
std::vector<std::pair<std::string, std::string>> action_fields(const Action& a);

// One-line stable rendering: `Kind repo=owner/name field="value" ...`.
std::string describe(const Action& a);

enum class ActionStatus { Applied, Noop, Failed };
std::string_view to_string(ActionStatus s);

struct ActionResult {
  ActionStatus status = ActionStatus::Applied;
  std::string detail;

  static ActionResult applied(std::string d = {}) { return {ActionStatus::Applied, std::move(d)}; }
  static ActionResult noop(std::string d = {}) { return {ActionStatus::Noop, std::move(d)}; }
  static ActionResult failed(std::string d) { return {ActionStatus::Failed, std::move(d)}; }

  bool operator==(const ActionResult&) const = default;
};

}  // namespace forgebot
