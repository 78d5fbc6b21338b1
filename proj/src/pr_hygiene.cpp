#include "forgebot/pr_hygiene.hpp"

#include "forgebot/text.hpp"

namespace forgebot::pr_hygiene {

namespace {

std::string whole_days(Duration d) { return std::to_string(std::chrono::duration_cast<std::chrono::hours>(d).count() / 24); }

}  // namespace

std::vector<Action> on_sync_outcome(const PrSnapshot& pr, bool conflict, Timestamp now, StaleStates& states,
                                    std::optional<Timestamp> label_since) {
  const bool labeled = pr.has_label(kNeedsRebase);
  if (conflict) {
    if (labeled) {
      if (!states.count(pr.number)) states[pr.number] = StaleState{pr.number, label_since.value_or(now), std::nullopt};
      return {};
    }
    states[pr.number] = StaleState{pr.number, now, std::nullopt};
    return {AddLabel{pr.head.repo, pr.number, kNeedsRebase}};
  }
  states.erase(pr.number);
  if (labeled) return {RemoveLabel{pr.head.repo, pr.number, kNeedsRebase}};
  return {};
}

std::vector<Action> stale_scan(StaleStates& states, const RepoId& repo, Timestamp now, const StaleSettings& settings,
                               const Templates& templates) {
  std::vector<Action> out;
  for (auto it = states.begin(); it != states.end();) {
    auto& st = it->second;
    std::map<std::string, std::string> values{{"pr_number", std::to_string(st.pr_number)},
                                              {"grace_days", whole_days(settings.grace)}};
    if (!st.warned_at) {
      if (now - st.labeled_since >= settings.warn_after) {
        values["days"] = whole_days(settings.warn_after);
        out.push_back(PostComment{repo, st.pr_number, text::fill(templates.stale_warning, values)});
        st.warned_at = now;
      }
    } else if (now - *st.warned_at >= settings.grace) {
      values["days"] = whole_days(settings.grace);
      out.push_back(ClosePr{repo, st.pr_number});
      out.push_back(PostComment{repo, st.pr_number, text::fill(templates.stale_closure, values)});
      it = states.erase(it);
      continue;
    }
    ++it;
  }
  return out;
}

bool PrHygiene::subscribes(EventKind kind) const {
  switch (kind) {
    case EventKind::PrOpened:
    case EventKind::PrSynchronized:
    case EventKind::BaseBranchPushed:
    case EventKind::PrClosed:
    case EventKind::ClockTick:
      return true;
    default:
      return false;
  }
}

std::vector<Action> PrHygiene::recheck(int number, WorkflowContext& ctx, RepoState& st) {
  auto pr = ctx.forge.pr_snapshot(ctx.repo.repo, number);
  if (pr.state != PrState::Open) return {};
  auto graph = ctx.forge.fetch_graph(ctx.repo.repo);
  if (pr.base.sha.empty() || !graph.contains(pr.head.sha) || !graph.contains(pr.base.sha)) return {};
  bool conflict = !graph.conflicts(pr.base.sha, pr.head.sha).empty();
  std::optional<Timestamp> since;
  if (conflict && pr.has_label(kNeedsRebase) && !st.stale.count(number))
    since = ctx.forge.label_added_at(ctx.repo.repo, number, kNeedsRebase);
  return on_sync_outcome(pr, conflict, ctx.now, st.stale, since);
}

void PrHygiene::rebuild(WorkflowContext& ctx, RepoState& st) {
  st.rebuilt = true;
  for (const auto& base : ctx.repo.base_branches) {
    for (int n : ctx.forge.open_prs(ctx.repo.repo, base)) {
      if (st.stale.count(n)) continue;
      auto pr = ctx.forge.pr_snapshot(ctx.repo.repo, n);
      if (!pr.has_label(kNeedsRebase)) continue;
      auto since = ctx.forge.label_added_at(ctx.repo.repo, n, kNeedsRebase);
      st.stale[n] = StaleState{n, since.value_or(ctx.now), std::nullopt};
    }
  }
}

std::vector<Action> PrHygiene::handle(const Event& event, WorkflowContext& ctx) {
  auto& st = state_[ctx.repo.repo];
  if (const auto* e = event.as<PrOpened>()) return recheck(e->number, ctx, st);
  if (const auto* e = event.as<PrSynchronized>()) return recheck(e->number, ctx, st);
  if (const auto* e = event.as<BaseBranchPushed>()) {
    std::vector<Action> out;
    for (int n : ctx.forge.open_prs(event.repo, e->branch)) {
      auto more = recheck(n, ctx, st);
      out.insert(out.end(), more.begin(), more.end());
    }
    return out;
  }
  if (const auto* e = event.as<PrClosed>()) {
    st.stale.erase(e->number);
    return {};
  }
  if (event.as<ClockTick>()) {
    if (!st.rebuilt) rebuild(ctx, st);
    // Drop episodes that ended outside our view (label removed by hand, PR
    // closed while we were not watching).
    for (auto it = st.stale.begin(); it != st.stale.end();) {
      auto pr = ctx.forge.pr_snapshot(ctx.repo.repo, it->first);
      if (pr.state != PrState::Open || !pr.has_label(kNeedsRebase)) it = st.stale.erase(it);
      else ++it;
    }
    return stale_scan(st.stale, ctx.repo.repo, ctx.now, ctx.repo.stale, ctx.repo.templates);
  }
  return {};
}

}  // namespace forgebot::pr_hygiene
