#pragma once

// Deterministic in-memory forge. Holds GitHub-side and GitLab-side
// repositories in one state value; `step` is the pure transition used by
// MockForge::apply.

#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "forgebot/action.hpp"
#include "forgebot/commit_graph.hpp"
#include "forgebot/forge_port.hpp"
#include "forgebot/model.hpp"
#include "json.hpp"

namespace forgebot::mock {

struct Comment {
  std::int64_t id = 0;
  int number = 0;
  std::string author;
  std::string body;
  bool operator==(const Comment&) const = default;
};

struct CheckRun {
  Sha sha;
  std::string name;
  CheckConclusion conclusion = CheckConclusion::Success;
  std::string summary;
  std::vector<std::pair<std::string, std::string>> links;
  bool operator==(const CheckRun&) const = default;
};

struct CommitStatus {
  StatusState state = StatusState::Pending;
  std::string target_url;
  bool operator==(const CommitStatus&) const = default;
};

struct PullRequest {
  int number = 0;
  std::string author;
  std::string title;
  std::string head_branch;
  Sha head_sha;
  std::string base_branch;
  std::set<std::string> labels;
  std::map<std::string, Timestamp> label_added;
  std::optional<int> milestone;
  std::set<std::string> assignees;
  int approvals = 0;
  int changes_requested = 0;
  CiVerdict seeded_ci = CiVerdict::None;
  PrState state = PrState::Open;
  std::optional<Sha> merge_commit;
  bool merge_signed = false;
  bool operator==(const PullRequest&) const = default;
};

struct Issue {
  int number = 0;
  std::string author;
  std::string title;
  std::string body;
  bool operator==(const Issue&) const = default;
};

struct Board {
  std::vector<std::string> columns;
  std::map<int, std::string> cards;  // pr number -> column
  bool operator==(const Board&) const = default;
};

struct Repo {
  std::map<std::string, Sha> branches;
  std::map<int, PullRequest> prs;
  std::map<int, Issue> issues;
  std::map<int, Milestone> milestones;
  std::map<int, Board> boards;
  std::vector<Comment> comments;
  std::vector<CheckRun> check_runs;
  std::map<std::pair<Sha, std::string>, CommitStatus> statuses;
  std::map<std::int64_t, JobOutcome> jobs;
  bool operator==(const Repo&) const = default;
};

// A webhook the forge would send as a consequence of an applied action.
struct Outgoing {
  Provider provider = Provider::GitHub;
  std::string kind;  // X-GitHub-Event / X-Gitlab-Event value
  std::string delivery_id;
  nlohmann::json body;
  bool operator==(const Outgoing&) const = default;
};

struct ForgeState {
  std::map<RepoId, Repo> repos;
  CommitGraph graph;
  std::map<std::string, std::set<std::string>> teams;  // "org/team" -> members
  std::string bot_login = "coqbot";
  LabelPrefixes prefixes;
  Timestamp now{};
  std::int64_t next_comment_id = 1000000;
  std::int64_t next_delivery = 1;
  std::vector<Outgoing> outbox;

  bool operator==(const ForgeState&) const = default;
};

// Pure transition: the returned state satisfies the action's postcondition,
// or equals the input when the result is Noop or Failed.
std::pair<ForgeState, ActionResult> step(const ForgeState& state, const Action& action);

// In-place variant used by MockForge; same semantics as step.
ActionResult apply_to(ForgeState& state, const Action& action);

// Canonical JSON (outbox excluded) and its SHA-256.
nlohmann::json to_json(const ForgeState& state);
std::string digest(const ForgeState& state);

// "github:owner/name" or "gitlab:group/name"; no prefix means GitHub.
RepoId parse_qualified_repo(const std::string& text);

// Snapshot derivation shared by MockForge and tests.
PrSnapshot snapshot_of(const ForgeState& state, const RepoId& repo, int number);

class MockForge final : public ForgePort {
 public:
  MockForge() = default;
  explicit MockForge(ForgeState state) : state_(std::move(state)) {}

  // Merges a seed document into the state. Commits are declared with
  // symbolic ids that later seeds and payload templates can refer to.
  void seed(const nlohmann::json& doc);

  // Sha for a symbolic commit id, or the argument itself if it is already a
  // full sha. Throws NotFound otherwise.
  Sha resolve(const std::string& symbol_or_sha) const;
  void bind_symbol(const std::string& symbol, const Sha& sha);

  // Mirrors the user-side effect of an incoming webhook (a comment being
  // posted, a card deleted, a branch pushed) so forge state stays consistent
  // with the events the bot sees.
  void observe(Provider provider, const std::string& kind, const nlohmann::json& body);

  void set_time(Timestamp now);
  std::vector<Outgoing> take_outbox();

  ForgeState state() const;
  std::string digest() const;

  PrSnapshot pr_snapshot(const RepoId& repo, int number) const override;
  bool is_team_member(std::string_view org, std::string_view team, std::string_view user) const override;
  std::vector<int> open_prs(const RepoId& repo, std::string_view base_branch) const override;
  std::optional<Sha> branch_head(const RepoId& repo, std::string_view branch) const override;
  CommitGraph fetch_graph(const RepoId& repo) const override;
  JobOutcome job_outcome(const RepoId& mirror, std::int64_t job_id) const override;
  std::vector<BoardCard> board_cards(const RepoId& repo, int board) const override;
  std::optional<Timestamp> label_added_at(const RepoId& repo, int number, std::string_view label) const override;

  ActionResult apply(const Action& action) override;

 private:
  mutable std::mutex mu_;
  ForgeState state_;
  std::map<std::string, Sha> symbols_;
};

// Runner that completes every submission with a canned reduction. Results
// are keyed by a substring of the script; scripts matching nothing get
// `default_reduction`.
class MockRunner final : public JobRunnerPort {
 public:
  struct Completion {
    std::string token;
    std::optional<std::string> reduced_case;
    std::optional<std::string> failure;
  };

  ActionResult submit(const std::string& token, const std::string& script) override;

  void canned(std::string script_substring, Completion result);
  std::vector<Completion> take_completions();
  std::size_t submitted() const;

  std::string default_reduction = "Goal False. Admitted.";

 private:
  mutable std::mutex mu_;
  std::vector<std::pair<std::string, Completion>> canned_;
  std::vector<Completion> pending_;
  std::set<std::string> seen_tokens_;
  std::size_t submitted_ = 0;
};

}  // namespace forgebot::mock
