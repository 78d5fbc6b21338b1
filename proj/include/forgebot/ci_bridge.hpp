#pragma once

// Mirrors PR merge candidates to a GitLab project for CI and maps pipeline
// and job outcomes back onto the originating GitHub commit.

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "forgebot/action.hpp"
#include "forgebot/commit_graph.hpp"
#include "forgebot/engine.hpp"
#include "forgebot/forge_port.hpp"
#include "forgebot/settings.hpp"

namespace forgebot::ci_bridge {

struct Candidate {
  ToyCommit commit;  // parents are exactly {base head, PR head}
  PushBranch push;   // force-push of `commit` to the mirror branch
};

struct Conflict {
  std::set<std::string> files;
};

using SyncPlan = std::variant<Candidate, Conflict>;

// Synthesizes the merge of the PR head into the current base head.
SyncPlan plan_sync(const CommitGraph& graph, const MirrorMapping& mapping, int pr_number, const Sha& pr_head,
                   const Sha& base_head);

struct CandidateRecord {
  int pr_number = 0;
  Sha origin_head;
  Sha base;
  Sha candidate;
  Timestamp pushed_at{};
  bool operator==(const CandidateRecord&) const = default;
};

// Current candidate per PR. A superseded candidate is simply no longer here.
using CandidateRecords = std::map<int, CandidateRecord>;

// (pr number, origin head) for the PR whose current candidate is `tested`.
std::optional<std::pair<int, Sha>> map_to_origin(const CandidateRecords& records, const Sha& tested);

inline constexpr std::size_t kExcerptLines = 40;
inline constexpr std::size_t kMaxExcerptBytes = 64 * 1024;

const std::vector<std::string>& default_error_patterns();

// Patterns are tried in priority order; the excerpt starts at the first line
// matching the highest-priority pattern that matches anywhere and spans at
// most kExcerptLines lines. Without any match, the last kExcerptLines lines.
// Never longer than kMaxExcerptBytes.
std::string summarize_failure(std::string_view log, const std::vector<std::string>& patterns);

// Check run for one finished job, on the origin commit.
std::vector<Action> report(const JobOutcome& outcome, const RepoId& origin_repo, const Sha& origin_sha,
                           const std::set<std::string>& docs_jobs, const std::vector<std::string>& patterns);

// Candidate records shared by the workflows that need to resolve a tested
// sha back to its PR.
class CandidateStore {
 public:
  CandidateRecords& operator[](const RepoId& repo) { return records_[repo]; }

 private:
  PerRepo<CandidateRecords> records_;
};

class CiBridge final : public Workflow {
 public:
  explicit CiBridge(std::shared_ptr<CandidateStore> store) : store_(std::move(store)) {}

  std::string_view name() const override { return "ci_bridge"; }
  bool subscribes(EventKind kind) const override;
  std::vector<Action> handle(const Event& event, WorkflowContext& ctx) override;

 private:
  std::vector<Action> sync(const PrSnapshot& pr, WorkflowContext& ctx);

  std::shared_ptr<CandidateStore> store_;
};

}  // namespace forgebot::ci_bridge
