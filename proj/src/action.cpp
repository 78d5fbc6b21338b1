#include "forgebot/action.hpp"

#include "json.hpp"

#include "forgebot/event.hpp"

namespace forgebot {

std::string_view to_string(EventKind k) {
  switch (k) {
    case EventKind::PrOpened: return "PrOpened";
    case EventKind::PrSynchronized: return "PrSynchronized";
    case EventKind::PrClosed: return "PrClosed";
    case EventKind::BaseBranchPushed: return "BaseBranchPushed";
    case EventKind::CommentPosted: return "CommentPosted";
    case EventKind::CommentEdited: return "CommentEdited";
    case EventKind::IssueOpened: return "IssueOpened";
    case EventKind::PipelineFinished: return "PipelineFinished";
    case EventKind::JobFinished: return "JobFinished";
    case EventKind::CardRemoved: return "CardRemoved";
    case EventKind::PushToBranch: return "PushToBranch";
    case EventKind::ClockTick: return "ClockTick";
    case EventKind::RunnerCompleted: return "RunnerCompleted";
  }
  return "?";
}

EventKind Event::kind() const { return static_cast<EventKind>(payload.index()); }

std::string_view to_string(JobStatus s) {
  switch (s) {
    case JobStatus::Success: return "success";
    case JobStatus::Failure: return "failed";
    case JobStatus::Canceled: return "canceled";
  }
  return "?";
}

std::string_view to_string(CheckConclusion c) {
  switch (c) {
    case CheckConclusion::Success: return "success";
    case CheckConclusion::Failure: return "failure";
    case CheckConclusion::Cancelled: return "cancelled";
  }
  return "?";
}

std::string_view to_string(StatusState s) {
  switch (s) {
    case StatusState::Pending: return "pending";
    case StatusState::Success: return "success";
    case StatusState::Failure: return "failure";
    case StatusState::Error: return "error";
  }
  return "?";
}

std::string_view to_string(ActionStatus s) {
  switch (s) {
    case ActionStatus::Applied: return "APPLIED";
    case ActionStatus::Noop: return "NOOP";
    case ActionStatus::Failed: return "FAILED";
  }
  return "?";
}

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

using Fields = std::vector<std::pair<std::string, std::string>>;

std::string num(std::int64_t n) { return std::to_string(n); }
std::string flag(bool b) { return b ? "true" : "false"; }

}  // namespace

std::string_view action_kind(const Action& a) {
  return std::visit(overloaded{
                        [](const AddLabel&) { return std::string_view("AddLabel"); },
                        [](const RemoveLabel&) { return std::string_view("RemoveLabel"); },
                        [](const PostComment&) { return std::string_view("PostComment"); },
                        [](const UpdateComment&) { return std::string_view("UpdateComment"); },
                        [](const ClosePr&) { return std::string_view("ClosePr"); },
                        [](const SetMilestone&) { return std::string_view("SetMilestone"); },
                        [](const MergePr&) { return std::string_view("MergePr"); },
                        [](const PushBranch&) { return std::string_view("PushBranch"); },
                        [](const DeleteBranch&) { return std::string_view("DeleteBranch"); },
                        [](const CreateCheckRun&) { return std::string_view("CreateCheckRun"); },
                        [](const SetCommitStatus&) { return std::string_view("SetCommitStatus"); },
                        [](const AddCardToColumn&) { return std::string_view("AddCardToColumn"); },
                        [](const MoveCard&) { return std::string_view("MoveCard"); },
                        [](const DispatchJob&) { return std::string_view("DispatchJob"); },
                    },
                    a);
}

const RepoId& action_repo(const Action& a) {
  return std::visit([](const auto& x) -> const RepoId& { return x.repo; }, a);
}

Fields action_fields(const Action& a) {
  const auto& repo = action_repo(a);
  Fields f{{"repo", repo.provider() == Provider::GitHub ? repo.full_name() : "gitlab:" + repo.full_name()}};
  std::visit(overloaded{
                 [&](const AddLabel& x) {
                   f.insert(f.end(), {{"number", num(x.number)}, {"label", x.label}});
                 },
                 [&](const RemoveLabel& x) {
                   f.insert(f.end(), {{"number", num(x.number)}, {"label", x.label}});
                 },
                 [&](const PostComment& x) {
                   f.insert(f.end(), {{"number", num(x.number)}, {"body", x.body}});
                 },
                 [&](const UpdateComment& x) {
                   f.insert(f.end(), {{"comment", num(x.comment_id)}, {"body", x.body}});
                 },
                 [&](const ClosePr& x) { f.emplace_back("number", num(x.number)); },
                 [&](const SetMilestone& x) {
                   f.insert(f.end(), {{"number", num(x.number)},
                                      {"milestone", x.milestone ? num(*x.milestone) : "none"}});
                 },
                 [&](const MergePr& x) {
                   f.insert(f.end(),
                            {{"number", num(x.number)}, {"message", x.message}, {"signed", flag(x.sign)}});
                 },
                 [&](const PushBranch& x) {
                   f.insert(f.end(), {{"branch", x.branch}, {"sha", x.sha.str()}, {"force", flag(x.force)}});
                 },
                 [&](const DeleteBranch& x) { f.emplace_back("branch", x.branch); },
                 [&](const CreateCheckRun& x) {
                   f.insert(f.end(), {{"sha", x.sha.str()},
                                      {"name", x.name},
                                      {"conclusion", std::string(to_string(x.conclusion))},
                                      {"summary", x.summary}});
                   for (const auto& [title, url] : x.links) f.emplace_back("link", title + " " + url);
                 },
                 [&](const SetCommitStatus& x) {
                   f.insert(f.end(), {{"sha", x.sha.str()},
                                      {"context", x.context},
                                      {"state", std::string(to_string(x.state))},
                                      {"url", x.target_url}});
                 },
                 [&](const AddCardToColumn& x) {
                   f.insert(f.end(),
                            {{"board", num(x.board)}, {"column", x.column}, {"number", num(x.pr_number)}});
                 },
                 [&](const MoveCard& x) {
                   f.insert(f.end(),
                            {{"board", num(x.board)}, {"number", num(x.pr_number)}, {"column", x.column}});
                 },
                 [&](const DispatchJob& x) {
                   f.insert(f.end(), {{"token", x.token}, {"script", x.script}});
                 },
             },
             a);
  return f;
}

std::string describe(const Action& a) {
  std::string out(action_kind(a));
  for (const auto& [k, v] : action_fields(a)) {
    out += ' ';
    out += k;
    out += '=';
    // JSON string escaping keeps multi-line bodies on one line.
    out += nlohmann::json(v).dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
  }
  return out;
}

}  // namespace forgebot
