#include "forgebot/ci_bridge.hpp"

#include <regex>

#include "forgebot/text.hpp"

namespace forgebot::ci_bridge {

SyncPlan plan_sync(const CommitGraph& graph, const MirrorMapping& mapping, int pr_number, const Sha& pr_head,
                   const Sha& base_head) {
  auto conflicts = graph.conflicts(base_head, pr_head);
  if (!conflicts.empty()) return Conflict{std::move(conflicts)};
  // The PR number in the message keeps candidates of distinct PRs distinct
  // even when they share head and base.
  auto message = "Merge candidate for PR #" + std::to_string(pr_number);
  auto commit = *graph.merge(base_head, pr_head, message);
  PushBranch push{mapping.mirror, mapping.branch_for(pr_number), commit.sha, true, {}};
  push.objects = graph.between(base_head, pr_head);
  push.objects.push_back(commit);
  return Candidate{std::move(commit), std::move(push)};
}

std::optional<std::pair<int, Sha>> map_to_origin(const CandidateRecords& records, const Sha& tested) {
  for (const auto& [pr, rec] : records)
    if (rec.candidate == tested) return std::make_pair(pr, rec.origin_head);
  return std::nullopt;
}

const std::vector<std::string>& default_error_patterns() {
  static const std::vector<std::string> patterns{R"(^Error:)", R"(^.*\bError\b.*$)", R"(^make.*\*\*\*)"};
  return patterns;
}

std::string summarize_failure(std::string_view log, const std::vector<std::string>& patterns) {
  auto lines = text::split_lines(log);
  std::size_t start = lines.size() > kExcerptLines ? lines.size() - kExcerptLines : 0;
  bool matched = false;
  for (const auto& p : patterns) {
    std::regex re(p, std::regex::ECMAScript);
    for (std::size_t i = 0; i < lines.size(); ++i) {
      if (std::regex_search(lines[i].begin(), lines[i].end(), re)) {
        start = i;
        matched = true;
        break;
      }
    }
    if (matched) break;
  }
  std::size_t end = std::min(lines.size(), start + kExcerptLines);
  std::string out;
  for (std::size_t i = start; i < end; ++i) {
    out.append(lines[i]);
    if (i + 1 < end) out += '\n';
  }
  return text::truncate_utf8(out, kMaxExcerptBytes);
}

std::vector<Action> report(const JobOutcome& outcome, const RepoId& origin_repo, const Sha& origin_sha,
                           const std::set<std::string>& docs_jobs, const std::vector<std::string>& patterns) {
  CreateCheckRun run;
  run.repo = origin_repo;
  run.sha = origin_sha;
  run.name = outcome.job_name;
  run.links.emplace_back("job", outcome.web_url);
  switch (outcome.status) {
    case JobStatus::Success:
      run.conclusion = CheckConclusion::Success;
      run.summary = "Job " + outcome.job_name + " succeeded: " + outcome.web_url;
      if (docs_jobs.count(outcome.job_name) && !outcome.artifact_links.empty()) {
        run.summary += "\n\nDocumentation artifacts:";
        for (const auto& [name, url] : outcome.artifact_links) {
          run.summary += "\n- [" + name + "](" + url + ")";
          run.links.emplace_back(name, url);
        }
      }
      break;
    case JobStatus::Failure: {
      run.conclusion = CheckConclusion::Failure;
      auto excerpt = outcome.log.empty() ? std::string("(empty log)") : summarize_failure(outcome.log, patterns);
      // Longest run of backticks in the excerpt decides the fence length.
      std::string fence = "```";
      while (excerpt.find(fence) != std::string::npos) fence += '`';
      run.summary = "Job " + outcome.job_name + " failed: " + outcome.web_url + "\n\n" + fence + "\n" + excerpt +
                    "\n" + fence;
      break;
    }
    case JobStatus::Canceled:
      run.conclusion = CheckConclusion::Cancelled;
      run.summary = "Job " + outcome.job_name + " was canceled: " + outcome.web_url;
      break;
  }
  return {std::move(run)};
}

bool CiBridge::subscribes(EventKind kind) const {
  switch (kind) {
    case EventKind::PrOpened:
    case EventKind::PrSynchronized:
    case EventKind::BaseBranchPushed:
    case EventKind::PrClosed:
    case EventKind::PipelineFinished:
    case EventKind::JobFinished:
      return true;
    default:
      return false;
  }
}

std::vector<Action> CiBridge::sync(const PrSnapshot& pr, WorkflowContext& ctx) {
  auto& records = (*store_)[ctx.repo.repo];
  if (pr.state != PrState::Open) return {};
  if (pr.base.sha.empty()) throw ConfigurationError("unknown base branch '" + pr.base.branch + "'");
  auto graph = ctx.forge.fetch_graph(ctx.repo.repo);
  if (!graph.contains(pr.head.sha) || !graph.contains(pr.base.sha)) {
    ctx.note("PR #" + std::to_string(pr.number) + " heads not fetched yet");
    return {};
  }
  auto plan = plan_sync(graph, *ctx.repo.mirror, pr.number, pr.head.sha, pr.base.sha);
  if (auto* conflict = std::get_if<Conflict>(&plan)) {
    records.erase(pr.number);
    ctx.note("PR #" + std::to_string(pr.number) + " conflicts on " +
             text::join({conflict->files.begin(), conflict->files.end()}, ","));
    return {};
  }
  auto& candidate = std::get<Candidate>(plan);
  records[pr.number] = CandidateRecord{pr.number, pr.head.sha, pr.base.sha, candidate.commit.sha, ctx.now};
  return {std::move(candidate.push)};
}

std::vector<Action> CiBridge::handle(const Event& event, WorkflowContext& ctx) {
  if (!ctx.repo.mirror) return {};
  const auto& mapping = *ctx.repo.mirror;
  auto& records = (*store_)[ctx.repo.repo];

  if (const auto* e = event.as<PrOpened>()) return sync(ctx.forge.pr_snapshot(event.repo, e->number), ctx);
  if (const auto* e = event.as<PrSynchronized>()) return sync(ctx.forge.pr_snapshot(event.repo, e->number), ctx);
  if (const auto* e = event.as<BaseBranchPushed>()) {
    std::vector<Action> out;
    for (int n : ctx.forge.open_prs(event.repo, e->branch)) {
      auto more = sync(ctx.forge.pr_snapshot(event.repo, n), ctx);
      out.insert(out.end(), more.begin(), more.end());
    }
    return out;
  }
  if (const auto* e = event.as<PrClosed>()) {
    records.erase(e->number);
    return {DeleteBranch{mapping.mirror, mapping.branch_for(e->number)}};
  }
  if (const auto* e = event.as<JobFinished>()) {
    auto origin = map_to_origin(records, e->sha);
    if (!origin) {
      ctx.note("job " + e->job_name + " tested " + e->sha.str() + " which is not a current candidate");
      return {};
    }
    auto outcome = ctx.forge.job_outcome(e->mirror_repo, e->job_id);
    outcome.job_name = e->job_name;
    outcome.status = e->status;
    const auto& patterns = ctx.repo.error_patterns.empty() ? default_error_patterns() : ctx.repo.error_patterns;
    return report(outcome, event.repo, origin->second, ctx.repo.docs_jobs, patterns);
  }
  if (const auto* e = event.as<PipelineFinished>()) {
    auto origin = map_to_origin(records, e->sha);
    if (!origin) {
      ctx.note("pipeline for " + e->sha.str() + " is not for a current candidate");
      return {};
    }
    StatusState state = e->status == JobStatus::Success   ? StatusState::Success
                        : e->status == JobStatus::Failure ? StatusState::Failure
                                                          : StatusState::Error;
    return {SetCommitStatus{event.repo, origin->second, "GitLab CI pipeline", state, e->web_url}};
  }
  return {};
}

}  // namespace forgebot::ci_bridge
