#pragma once

// Normalized forge occurrences. The set of payloads is closed: webhook kinds
// the gateway does not recognize never become an Event.

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "forgebot/model.hpp"

namespace forgebot {

enum class EventKind {
  PrOpened,
  PrSynchronized,
  PrClosed,
  BaseBranchPushed,
  CommentPosted,
  CommentEdited,
  IssueOpened,
  PipelineFinished,
  JobFinished,
  CardRemoved,
  PushToBranch,
  ClockTick,
  RunnerCompleted,
};

std::string_view to_string(EventKind k);

struct PushedCommit {
  Sha sha;
  std::string message;
  bool operator==(const PushedCommit&) const = default;
};

struct PrOpened {
  int number = 0;
  Sha head_sha;
  std::string base_branch;
  bool operator==(const PrOpened&) const = default;
};

struct PrSynchronized {
  int number = 0;
  Sha head_sha;
  bool operator==(const PrSynchronized&) const = default;
};

struct PrClosed {
  int number = 0;
  bool merged = false;
  std::optional<Sha> merge_commit;
  bool operator==(const PrClosed&) const = default;
};

struct BaseBranchPushed {
  std::string branch;
  Sha head_sha;
  std::vector<PushedCommit> commits;
  bool operator==(const BaseBranchPushed&) const = default;
};

struct PushToBranch {
  std::string branch;
  Sha head_sha;
  std::vector<PushedCommit> commits;
  bool operator==(const PushToBranch&) const = default;
};

struct CommentPosted {
  int number = 0;  // issue or PR
  bool on_pr = false;
  std::int64_t comment_id = 0;
  std::string body;
  bool operator==(const CommentPosted&) const = default;
};

struct CommentEdited {
  int number = 0;
  bool on_pr = false;
  std::int64_t comment_id = 0;
  std::string body;
  std::optional<std::string> previous_body;
  bool operator==(const CommentEdited&) const = default;
};

struct IssueOpened {
  int number = 0;
  std::string title;
  std::string body;
  bool operator==(const IssueOpened&) const = default;
};

enum class JobStatus { Success, Failure, Canceled };
std::string_view to_string(JobStatus s);

// Pipeline and job events arrive from the mirror. `mirror_repo` names the
// GitLab project; Event::repo is the source repository it mirrors.
struct PipelineFinished {
  RepoId mirror_repo;
  std::int64_t pipeline_id = 0;
  std::string ref;
  Sha sha;
  JobStatus status = JobStatus::Success;
  std::string web_url;
  bool operator==(const PipelineFinished&) const = default;
};

struct JobFinished {
  RepoId mirror_repo;
  std::int64_t job_id = 0;
  std::string job_name;
  std::string ref;
  Sha sha;
  JobStatus status = JobStatus::Success;
  bool operator==(const JobFinished&) const = default;
};

struct CardRemoved {
  int board = 0;
  std::int64_t card_id = 0;
  int pr_number = 0;
  bool operator==(const CardRemoved&) const = default;
};

struct ClockTick {
  Timestamp now;
  std::string workflow;  // schedule entry that fired
  bool operator==(const ClockTick&) const = default;
};

struct RunnerCompleted {
  std::string token;
  std::optional<std::string> reduced_case;
  std::optional<std::string> failure;
  bool operator==(const RunnerCompleted&) const = default;
};

using EventPayload = std::variant<PrOpened, PrSynchronized, PrClosed, BaseBranchPushed, CommentPosted,
                                  CommentEdited, IssueOpened, PipelineFinished, JobFinished, CardRemoved,
                                  PushToBranch, ClockTick, RunnerCompleted>;

struct Event {
  std::string delivery_id;
  RepoId repo;
  std::string actor;  // login of whoever caused it; empty for ticks
  EventPayload payload;

  EventKind kind() const;

  template <typename T>
  const T* as() const {
    return std::get_if<T>(&payload);
  }

  bool operator==(const Event&) const = default;
};

}  // namespace forgebot
