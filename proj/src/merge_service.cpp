#include "forgebot/merge_service.hpp"

#include <map>
#include <optional>

#include "forgebot/crypto.hpp"
#include "forgebot/text.hpp"

namespace forgebot::merge_service {

namespace {

// The normalized command line if present: handle kept, verb lowercased.
std::optional<std::string> find_command(std::string_view body, std::string_view handle) {
  const std::string prefix = "@" + std::string(handle);
  for (auto line : text::split_lines(body)) {
    line = text::trim(line);
    if (line.size() <= prefix.size() || line.substr(0, prefix.size()) != prefix) continue;
    auto rest = line.substr(prefix.size());
    if (rest.front() != ' ' && rest.front() != '\t') continue;
    // Collapse inner whitespace so "merge  now" and "merge now" agree.
    std::string cur;
    std::vector<std::string> parts;
    for (char c : rest) {
      if (c == ' ' || c == '\t') {
        if (!cur.empty()) parts.push_back(std::move(cur));
        cur.clear();
      } else {
        cur += c;
      }
    }
    if (!cur.empty()) parts.push_back(cur);
    if (parts.size() == 2 && text::iequals(parts[0], "merge") && text::iequals(parts[1], "now"))
      return prefix + " merge now";
  }
  return std::nullopt;
}

std::string plural(int n, const char* word) { return std::to_string(n) + " " + word + (n == 1 ? "" : "s"); }

}  // namespace

std::string_view to_string(ViolationCode c) {
  switch (c) {
    case ViolationCode::NotMaintainer: return "NOT_MAINTAINER";
    case ViolationCode::HasNeedsLabel: return "HAS_NEEDS_LABEL";
    case ViolationCode::NoKindLabel: return "NO_KIND_LABEL";
    case ViolationCode::NoMilestone: return "NO_MILESTONE";
    case ViolationCode::NoAssignee: return "NO_ASSIGNEE";
    case ViolationCode::InsufficientReviews: return "INSUFFICIENT_REVIEWS";
    case ViolationCode::ChangesRequested: return "CHANGES_REQUESTED";
    case ViolationCode::WrongBase: return "WRONG_BASE";
    case ViolationCode::CiNotGreen: return "CI_NOT_GREEN";
    case ViolationCode::Conflict: return "CONFLICT";
    case ViolationCode::SelfMerge: return "SELF_MERGE";
  }
  return "?";
}

bool parse_merge_command(std::string_view body, std::string_view bot_handle) {
  return find_command(body, bot_handle).has_value();
}

std::vector<Violation> evaluate_policy(const PrSnapshot& pr, std::string_view commenter, bool is_member,
                                       const MergePolicy& policy) {
  std::vector<Violation> out;
  auto add = [&](ViolationCode code, std::string detail) { out.push_back({code, std::move(detail)}); };

  if (!is_member) add(ViolationCode::NotMaintainer, "you are not a member of the " + policy.authorized_team + " team");

  std::vector<std::string> blocking;
  for (const auto& l : pr.labels)
    if (policy.forbidden_categories.count(l.category)) blocking.push_back(l.name);
  if (!blocking.empty()) add(ViolationCode::HasNeedsLabel, "there are blocking labels: " + text::join(blocking, ", "));

  if (policy.require_kind_label && !pr.has_category(LabelCategory::Kind))
    add(ViolationCode::NoKindLabel, "there is no kind label");
  if (policy.require_milestone && !pr.milestone) add(ViolationCode::NoMilestone, "no milestone is set");
  if (policy.require_assignee && pr.assignees.empty()) add(ViolationCode::NoAssignee, "no assignee is set");
  if (pr.approved_reviews < policy.min_approvals)
    add(ViolationCode::InsufficientReviews, "it has " + plural(pr.approved_reviews, "approving review") + ", " +
                                                std::to_string(policy.min_approvals) + " required");
  if (policy.forbid_changes_requested && pr.changes_requested_reviews > 0)
    add(ViolationCode::ChangesRequested,
        "changes were requested in " + plural(pr.changes_requested_reviews, "review"));
  if (!policy.allowed_base_branches.empty() && !policy.allowed_base_branches.count(pr.base.branch))
    add(ViolationCode::WrongBase, "the target branch " + pr.base.branch + " is not allowed");
  if (policy.require_ci_success && pr.ci_verdict != CiVerdict::Success)
    add(ViolationCode::CiNotGreen, "CI status is " + text::to_lower(to_string(pr.ci_verdict)));
  if (policy.forbid_conflicts && pr.mergeable == Mergeability::Conflicting)
    add(ViolationCode::Conflict, "it has merge conflicts");
  if (policy.forbid_self_merge && commenter == pr.author)
    add(ViolationCode::SelfMerge, "you are the author of this PR");
  return out;
}

std::string merge_message(const PrSnapshot& pr, std::string_view tmpl) {
  std::map<std::string, std::string> values{{"number", std::to_string(pr.number)}, {"title", pr.title}};
  std::vector<std::string> lines;
  // split_lines drops a trailing empty line, which is what we want here.
  for (auto line : text::split_lines(tmpl)) {
    if (line.find("{assignees}") == std::string_view::npos) {
      lines.push_back(text::fill(line, values));
      continue;
    }
    for (const auto& a : pr.assignees) {
      auto v = values;
      v["assignees"] = a;
      lines.push_back(text::fill(line, v));
    }
  }
  while (!lines.empty() && text::trim(lines.back()).empty()) lines.pop_back();
  return text::join(lines, "\n");
}

std::vector<Action> execute(const PrSnapshot& pr, std::string_view tmpl) {
  return {MergePr{pr.head.repo, pr.number, merge_message(pr, tmpl), true}};
}

std::string violation_comment(std::string_view commenter, const std::vector<Violation>& violations) {
  std::string out = "@" + std::string(commenter) + ": I cannot merge this PR because:";
  for (const auto& v : violations) out += "\n- " + v.detail;
  return out;
}

std::pair<std::string, std::string> team_of(const MergePolicy& policy, const RepoId& repo) {
  auto slash = policy.authorized_team.find('/');
  if (slash == std::string::npos) return {repo.owner(), policy.authorized_team};
  return {policy.authorized_team.substr(0, slash), policy.authorized_team.substr(slash + 1)};
}

bool MergeService::subscribes(EventKind kind) const {
  return kind == EventKind::CommentPosted || kind == EventKind::CommentEdited;
}

std::vector<Action> MergeService::handle(const Event& event, WorkflowContext& ctx) {
  int number = 0;
  bool on_pr = false;
  std::int64_t comment_id = 0;
  std::string_view body;
  if (const auto* e = event.as<CommentPosted>()) {
    number = e->number, on_pr = e->on_pr, comment_id = e->comment_id, body = e->body;
  } else if (const auto* e = event.as<CommentEdited>()) {
    number = e->number, on_pr = e->on_pr, comment_id = e->comment_id, body = e->body;
  } else {
    return {};
  }
  if (!on_pr || event.actor == ctx.bot.bot_handle) return {};
  auto command = find_command(body, ctx.bot.bot_handle);
  if (!command) return {};

  auto key = std::make_pair(comment_id, crypto::sha256_hex(*command));
  auto& seen = ledger_[ctx.repo.repo];
  if (!seen.insert(key).second) {
    ctx.note("merge command of comment " + std::to_string(comment_id) + " already handled");
    return {};
  }

  auto pr = ctx.forge.pr_snapshot(ctx.repo.repo, number);
  if (pr.state == PrState::Merged)
    return {PostComment{ctx.repo.repo, number, "@" + event.actor + ": this PR has already been merged."}};
  if (pr.state == PrState::Closed)
    return {PostComment{ctx.repo.repo, number, "@" + event.actor + ": this PR is closed."}};

  const auto& policy = ctx.repo.merge_policy;
  auto [org, team] = team_of(policy, ctx.repo.repo);
  bool member = ctx.forge.is_team_member(org, team, event.actor);
  auto violations = evaluate_policy(pr, event.actor, member, policy);

  std::vector<std::string> codes;
  for (const auto& v : violations) codes.emplace_back(to_string(v.code));
  ctx.note("violations=[" + text::join(codes, ",") + "]");

  if (!violations.empty()) return {PostComment{ctx.repo.repo, number, violation_comment(event.actor, violations)}};
  return execute(pr, ctx.repo.templates.merge_message);
}

std::vector<Action> MergeService::on_failed(const Action& action, const ActionResult& result, WorkflowContext&) {
  const auto* merge = std::get_if<MergePr>(&action);
  if (!merge) return {};
  return {PostComment{merge->repo, merge->number, "The merge failed: " + result.detail + "."}};
}

}  // namespace forgebot::merge_service
