#pragma once

// Typed interface to a forge. Queries (state triggers) live on ForgeReader;
// ForgePort adds the single action executor. Workflow handlers only ever see
// a ForgeReader, so they cannot mutate the forge while being evaluated.

#include <chrono>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "forgebot/action.hpp"
#include "forgebot/commit_graph.hpp"
#include "forgebot/errors.hpp"
#include "forgebot/event.hpp"
#include "forgebot/model.hpp"

namespace forgebot {

struct JobOutcome {
  std::string job_name;
  JobStatus status = JobStatus::Success;
  std::string log;
  std::string web_url;
  std::vector<std::pair<std::string, std::string>> artifact_links;  // (name, url)
  std::string script;  // what the job ran; used to offer reproduction

  bool operator==(const JobOutcome&) const = default;
};

struct BoardCard {
  int board = 0;
  int pr_number = 0;
  std::string column;

  bool operator==(const BoardCard&) const = default;
};

class ForgeReader {
 public:
  virtual ~ForgeReader() = default;

  // Throws NotFound for an unknown PR, TransportError on transport failure.
  virtual PrSnapshot pr_snapshot(const RepoId& repo, int number) const = 0;

  // Throws ConfigurationError for an unknown team.
  virtual bool is_team_member(std::string_view org, std::string_view team, std::string_view user) const = 0;

  // Numbers of open PRs targeting `base_branch`, ascending.
  virtual std::vector<int> open_prs(const RepoId& repo, std::string_view base_branch) const = 0;

  virtual std::optional<Sha> branch_head(const RepoId& repo, std::string_view branch) const = 0;

  // A local copy of the repository's history (what `git fetch` would give).
  virtual CommitGraph fetch_graph(const RepoId& repo) const = 0;

  virtual JobOutcome job_outcome(const RepoId& mirror, std::int64_t job_id) const = 0;

  virtual std::vector<BoardCard> board_cards(const RepoId& repo, int board) const = 0;

  // When `label` was last added to the PR, from the forge's event timeline.
  virtual std::optional<Timestamp> label_added_at(const RepoId& repo, int number, std::string_view label) const = 0;
};

class ForgePort : public ForgeReader {
 public:
  // Idempotent: a second identical action reports Noop. Never throws for
  // forge-side refusals; those come back as Failed with the reason.
  virtual ActionResult apply(const Action& action) = 0;
};

// Executes minimization scripts. Completion comes back asynchronously as a
// RunnerCompleted event carrying the same token. Scripts are passed verbatim;
// sandboxing them is the runner's responsibility.
class JobRunnerPort {
 public:
  virtual ~JobRunnerPort() = default;
  virtual ActionResult submit(const std::string& token, const std::string& script) = 0;
};

struct RetryPolicy {
  std::chrono::milliseconds base{1000};
  int factor = 2;
  int max_attempts = 5;
};

using Sleeper = std::function<void(std::chrono::milliseconds)>;

// Calls `fn` until it stops throwing TransportError, sleeping base, base*f,
// base*f^2, ... between attempts. Rethrows after max_attempts.
template <typename F>
auto with_retry(F&& fn, const RetryPolicy& policy, const Sleeper& sleep) -> decltype(fn()) {
  auto delay = policy.base;
  for (int attempt = 1;; ++attempt) {
    try {
      return fn();
    } catch (const TransportError&) {
      if (attempt >= policy.max_attempts) throw;
      sleep(delay);
      delay *= policy.factor;
    }
  }
}

}  // namespace forgebot
