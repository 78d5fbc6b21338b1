#pragma once

// Hands reproduction scripts from comments and issues to the external bug
// minimizer, offers minimization when a reverse-dependency CI job fails, and
// posts the runner's result back to whoever asked.

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "forgebot/action.hpp"
#include "forgebot/ci_bridge.hpp"
#include "forgebot/engine.hpp"
#include "forgebot/errors.hpp"

namespace forgebot::minimizer_gateway {

struct UsageError : InvalidInput {
  using InvalidInput::InvalidInput;
};

enum class RequestKind { Manual, CiProposed };

struct MinimizationRequest {
  std::string id;
  RepoId repo;
  int number = 0;
  std::int64_t comment_id = 0;  // 0 for an issue body
  std::string triggerer;
  std::string script;
  RequestKind kind = RequestKind::Manual;
  bool operator==(const MinimizationRequest&) const = default;
};

// A line `@<handle> minimize` followed by a fenced code block; returns the
// block contents. Throws UsageError when the command has no (non-empty)
// block.
std::optional<std::string> parse_minimize_command(std::string_view body, std::string_view bot_handle);

std::string usage_text(std::string_view bot_handle);

// The comment a user can post to start minimization of `script`.
std::string trigger_command(std::string_view bot_handle, std::string_view script);

std::string request_id(const RepoId& repo, int number, std::int64_t comment_id, std::string_view script);

class MinimizerGateway final : public Workflow {
 public:
  explicit MinimizerGateway(std::shared_ptr<ci_bridge::CandidateStore> store) : store_(std::move(store)) {}

  std::string_view name() const override { return "minimizer_gateway"; }
  bool subscribes(EventKind kind) const override;
  std::vector<Action> handle(const Event& event, WorkflowContext& ctx) override;
  std::vector<Action> on_failed(const Action& action, const ActionResult& result, WorkflowContext& ctx) override;

 private:
  struct RepoState {
    std::map<std::string, MinimizationRequest> outstanding;
    std::set<std::string> retired;
    std::set<std::tuple<int, std::string, Sha>> proposed;  // (pr, job, candidate)
    std::set<std::pair<int, std::string>> proposed_scripts;
  };

  std::vector<Action> on_command(const Event& event, int number, std::int64_t comment_id, std::string_view body,
                                 WorkflowContext& ctx, RepoState& st);
  std::vector<Action> propose_from_ci(const JobFinished& e, WorkflowContext& ctx, RepoState& st);
  std::vector<Action> on_job_complete(const RunnerCompleted& e, WorkflowContext& ctx, RepoState& st);

  std::shared_ptr<ci_bridge::CandidateStore> store_;
  PerRepo<RepoState> state_;
};

}  // namespace forgebot::minimizer_gateway
