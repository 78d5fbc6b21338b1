#include "forgebot/minimizer_gateway.hpp"

#include "forgebot/crypto.hpp"
#include "forgebot/text.hpp"

namespace forgebot::minimizer_gateway {

namespace {

std::string fence_for(std::string_view content) {
  std::string fence = "```";
  while (content.find(fence) != std::string_view::npos) fence += '`';
  return fence;
}

}  // namespace

std::optional<std::string> parse_minimize_command(std::string_view body, std::string_view bot_handle) {
  const std::string prefix = "@" + std::string(bot_handle);
  auto lines = text::split_lines(body);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    auto line = text::trim(lines[i]);
    if (line.substr(0, prefix.size()) != prefix) continue;
    auto rest = line.substr(prefix.size());
    if (rest.empty() || (rest.front() != ' ' && rest.front() != '\t')) continue;
    if (!text::iequals(text::trim(rest), "minimize")) continue;

    std::size_t j = i + 1;
    while (j < lines.size() && text::trim(lines[j]).empty()) ++j;
    if (j == lines.size()) throw UsageError(usage_text(bot_handle));
    auto open = text::trim(lines[j]);
    std::size_t ticks = 0;
    while (ticks < open.size() && open[ticks] == '`') ++ticks;
    if (ticks < 3) throw UsageError(usage_text(bot_handle));
    const std::string fence(ticks, '`');

    std::vector<std::string> content;
    bool closed = false;
    for (++j; j < lines.size(); ++j) {
      auto t = text::trim(lines[j]);
      if (t.substr(0, ticks) == fence && text::trim(t.substr(ticks)).empty()) {
        closed = true;
        break;
      }
      content.emplace_back(lines[j]);
    }
    auto script = text::join(content, "\n");
    if (!closed || text::trim(script).empty()) throw UsageError(usage_text(bot_handle));
    return script;
  }
  return std::nullopt;
}

std::string usage_text(std::string_view bot_handle) {
  return "To request a minimization, put the reproduction script in a code block right after the command:\n\n"
         "````\n@" +
         std::string(bot_handle) + " minimize\n```\n<commands that reproduce the bug>\n```\n````";
}

std::string trigger_command(std::string_view bot_handle, std::string_view script) {
  auto fence = fence_for(script);
  return "@" + std::string(bot_handle) + " minimize\n" + fence + "\n" + std::string(script) + "\n" + fence;
}

std::string request_id(const RepoId& repo, int number, std::int64_t comment_id, std::string_view script) {
  auto key = std::string(to_string(repo.provider())) + ":" + repo.full_name() + "#" + std::to_string(number) + "/" +
             std::to_string(comment_id) + "\n" + std::string(script);
  return "min-" + crypto::sha256_hex(key).substr(0, 16);
}

bool MinimizerGateway::subscribes(EventKind kind) const {
  switch (kind) {
    case EventKind::CommentPosted:
    case EventKind::IssueOpened:
    case EventKind::JobFinished:
    case EventKind::RunnerCompleted:
      return true;
    default:
      return false;
  }
}

std::vector<Action> MinimizerGateway::on_command(const Event& event, int number, std::int64_t comment_id,
                                                 std::string_view body, WorkflowContext& ctx, RepoState& st) {
  std::optional<std::string> script;
  try {
    script = parse_minimize_command(body, ctx.bot.bot_handle);
  } catch (const UsageError& e) {
    return {PostComment{ctx.repo.repo, number, "@" + event.actor + ": " + e.what()}};
  }
  if (!script) return {};
  auto id = request_id(ctx.repo.repo, number, comment_id, *script);
  if (st.outstanding.count(id) || st.retired.count(id)) {
    ctx.note("minimization " + id + " already requested");
    return {};
  }
  auto kind = st.proposed_scripts.count({number, *script}) ? RequestKind::CiProposed : RequestKind::Manual;
  st.outstanding[id] = MinimizationRequest{id, ctx.repo.repo, number, comment_id, event.actor, *script, kind};
  ctx.note(std::string("minimization ") + id + (kind == RequestKind::Manual ? " (manual)" : " (ci-proposed)"));
  return {DispatchJob{ctx.repo.repo, id, *script}};
}

std::vector<Action> MinimizerGateway::propose_from_ci(const JobFinished& e, WorkflowContext& ctx,
                                                      RepoState& st) {
  if (e.status != JobStatus::Failure || !ctx.repo.reverse_dependency_jobs.count(e.job_name)) return {};
  auto origin = ci_bridge::map_to_origin((*store_)[ctx.repo.repo], e.sha);
  if (!origin) return {};
  int pr = origin->first;
  if (!st.proposed.insert({pr, e.job_name, e.sha}).second) {
    ctx.note("minimization of " + e.job_name + " on " + e.sha.str() + " already proposed");
    return {};
  }
  auto outcome = ctx.forge.job_outcome(e.mirror_repo, e.job_id);
  if (outcome.script.empty()) {
    ctx.note("job " + e.job_name + " has no reproduction script");
    return {};
  }
  st.proposed_scripts.insert({pr, outcome.script});
  auto command = trigger_command(ctx.bot.bot_handle, outcome.script);
  auto outer = fence_for(command);
  auto body = "The job " + e.job_name + " (" + outcome.web_url +
              ") failed on a reverse dependency. To minimize the failure, post the following comment:\n\n" + outer +
              "\n" + command + "\n" + outer;
  return {PostComment{ctx.repo.repo, pr, body}};
}

std::vector<Action> MinimizerGateway::on_job_complete(const RunnerCompleted& e, WorkflowContext& ctx,
                                                      RepoState& st) {
  auto it = st.outstanding.find(e.token);
  if (it == st.outstanding.end()) {
    ctx.note("completion for unknown or retired request " + e.token + " dropped");
    return {};
  }
  auto req = std::move(it->second);
  st.outstanding.erase(it);
  st.retired.insert(req.id);
  std::string body = "@" + req.triggerer + ": ";
  if (e.reduced_case) {
    auto fence = fence_for(*e.reduced_case);
    body += "the minimized test case is:\n\n" + fence + "coq\n" + *e.reduced_case + "\n" + fence;
  } else {
    body += "the minimization failed: " + e.failure.value_or("no diagnostic given");
  }
  return {PostComment{req.repo, req.number, body}};
}

std::vector<Action> MinimizerGateway::handle(const Event& event, WorkflowContext& ctx) {
  auto& st = state_[ctx.repo.repo];
  if (const auto* e = event.as<RunnerCompleted>()) return on_job_complete(*e, ctx, st);
  if (const auto* e = event.as<JobFinished>()) return propose_from_ci(*e, ctx, st);
  if (event.actor == ctx.bot.bot_handle) return {};
  if (const auto* e = event.as<CommentPosted>()) return on_command(event, e->number, e->comment_id, e->body, ctx, st);
  if (const auto* e = event.as<IssueOpened>()) return on_command(event, e->number, 0, e->body, ctx, st);
  return {};
}

std::vector<Action> MinimizerGateway::on_failed(const Action& action, const ActionResult& result,
                                                WorkflowContext& ctx) {
  const auto* job = std::get_if<DispatchJob>(&action);
  if (!job) return {};
  auto& st = state_[ctx.repo.repo];
  auto it = st.outstanding.find(job->token);
  if (it == st.outstanding.end()) return {};
  auto req = std::move(it->second);
  st.outstanding.erase(it);
  st.retired.insert(req.id);
  return {PostComment{req.repo, req.number, "@" + req.triggerer + ": the minimizer could not be started: " +
                                                result.detail}};
}

}  // namespace forgebot::minimizer_gateway
