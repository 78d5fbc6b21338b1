#include "forgebot/backport_tracker.hpp"

#include <charconv>
#include <regex>

#include "forgebot/text.hpp"

namespace forgebot::backport_tracker {

namespace {

bool starts_with_ci(std::string_view s, std::string_view prefix) {
  return s.size() >= prefix.size() && text::iequals(s.substr(0, prefix.size()), prefix);
}

void apply_option(std::string_view opt, BackportSpec& spec, std::string_view line) {
  auto colon = opt.find(':');
  if (colon == std::string_view::npos) throw DirectiveError("option without value in '" + std::string(line) + "'");
  auto key = text::to_lower(text::trim(opt.substr(0, colon)));
  auto value = std::string(text::trim(opt.substr(colon + 1)));
  if (value.empty()) throw DirectiveError("empty value for '" + key + "'");
  if (key == "request inclusion column") {
    spec.request_column = value;
  } else if (key == "shipped column") {
    spec.shipped_column = value;
  } else if (key == "rejection milestone") {
    int n = 0;
    auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), n);
    if (ec != std::errc() || p != value.data() + value.size() || n <= 0)
      throw DirectiveError("rejection milestone must be a positive number, got '" + value + "'");
    spec.rejection_milestone = n;
  } else {
    throw DirectiveError("unknown option '" + key + "'");
  }
}

}  // namespace

std::optional<BackportSpec> parse_milestone_metadata(std::string_view description, std::string_view keyword,
                                                     const BackportSettings& defaults) {
  const std::string head = std::string(keyword) + ":";
  for (auto raw : text::split_lines(description)) {
    auto line = text::trim(raw);
    if (!starts_with_ci(line, head)) continue;
    auto rest = text::trim(line.substr(head.size()));
    if (!starts_with_ci(rest, "backport to"))
      throw DirectiveError("expected 'backport to <branch>' in '" + std::string(line) + "'");
    rest = text::trim(rest.substr(std::string_view("backport to").size()));

    BackportSpec spec;
    spec.request_column = defaults.request_column;
    spec.shipped_column = defaults.shipped_column;

    auto paren = rest.find('(');
    auto branch = text::trim(rest.substr(0, paren));
    if (branch.empty()) throw DirectiveError("missing branch in '" + std::string(line) + "'");
    if (branch.find_first_of(" \t") != std::string_view::npos)
      throw DirectiveError("branch name contains whitespace in '" + std::string(line) + "'");
    spec.release_branch = std::string(branch);

    if (paren != std::string_view::npos) {
      auto close = rest.rfind(')');
      if (close == std::string_view::npos || close < paren || !text::trim(rest.substr(close + 1)).empty())
        throw DirectiveError("unbalanced parenthesis in '" + std::string(line) + "'");
      auto opts = rest.substr(paren + 1, close - paren - 1);
      std::size_t pos = 0;
      while (pos <= opts.size()) {
        auto semi = opts.find(';', pos);
        auto opt = text::trim(opts.substr(pos, semi == std::string_view::npos ? std::string_view::npos : semi - pos));
        if (!opt.empty()) apply_option(opt, spec, line);
        if (semi == std::string_view::npos) break;
        pos = semi + 1;
      }
    }
    if (spec.request_column == spec.shipped_column)
      throw DirectiveError("request and shipped columns must differ in '" + std::string(line) + "'");
    return spec;
  }
  return std::nullopt;
}

std::optional<int> shipped_pr(std::string_view message, const std::map<Sha, int>& merge_commits) {
  static const std::regex title(R"(^Merge PR #(\d+))");
  static const std::regex trailer(R"(\(cherry picked from commit ([0-9a-f]{40})\))");
  std::match_results<std::string_view::const_iterator> m;
  if (std::regex_search(message.begin(), message.end(), m, title)) return std::stoi(m[1].str());
  if (std::regex_search(message.begin(), message.end(), m, trailer)) {
    auto it = merge_commits.find(Sha(m[1].str()));
    if (it != merge_commits.end()) return it->second;
  }
  return std::nullopt;
}

bool BackportTracker::subscribes(EventKind kind) const {
  return kind == EventKind::PrClosed || kind == EventKind::PushToBranch || kind == EventKind::CardRemoved;
}

void BackportTracker::load(WorkflowContext& ctx, RepoState& st) {
  st.cards.clear();
  for (const auto& card : ctx.forge.board_cards(ctx.repo.repo, ctx.repo.backport.board))
    st.cards[card.pr_number] = card.column;
  st.loaded = true;
}

std::optional<BackportSpec> BackportTracker::spec_for(const PrSnapshot& pr, WorkflowContext& ctx, RepoState& st,
                                                      std::vector<Action>& out) {
  if (!pr.milestone) return std::nullopt;
  try {
    return parse_milestone_metadata(pr.milestone->description, ctx.bot.bot_handle, ctx.repo.backport);
  } catch (const DirectiveError& e) {
    if (st.reported_milestones.insert(pr.milestone->number).second)
      out.push_back(PostComment{ctx.repo.repo, pr.number,
                                "The backport directive of milestone \"" + pr.milestone->title +
                                    "\" could not be read: " + e.what() + "."});
    ctx.note("milestone " + std::to_string(pr.milestone->number) + ": " + e.what());
    return std::nullopt;
  }
}

std::vector<Action> BackportTracker::on_pr_merged(const Event&, const PrClosed& e, WorkflowContext& ctx,
                                                  RepoState& st) {
  if (!e.merged) return {};
  if (e.merge_commit) st.merge_commits[*e.merge_commit] = e.number;
  auto pr = ctx.forge.pr_snapshot(ctx.repo.repo, e.number);
  std::vector<Action> out;
  auto spec = spec_for(pr, ctx, st, out);
  if (!spec) return out;
  if (!st.loaded) load(ctx, st);
  if (st.cards.count(e.number)) return out;
  st.cards[e.number] = spec->request_column;
  out.push_back(AddCardToColumn{ctx.repo.repo, ctx.repo.backport.board, spec->request_column, e.number});
  return out;
}

std::vector<Action> BackportTracker::on_release_push(const PushToBranch& e, WorkflowContext& ctx, RepoState& st) {
  std::vector<Action> out;
  std::set<int> moved;
  for (const auto& c : e.commits) {
    auto n = shipped_pr(c.message, st.merge_commits);
    if (!n || moved.count(*n)) continue;
    if (!st.loaded) load(ctx, st);
    auto card = st.cards.find(*n);
    if (card == st.cards.end()) {
      ctx.note("PR #" + std::to_string(*n) + " pushed to " + e.branch + " without a backport card");
      continue;
    }
    PrSnapshot pr;
    try {
      pr = ctx.forge.pr_snapshot(ctx.repo.repo, *n);
    } catch (const NotFound&) {
      continue;
    }
    auto spec = spec_for(pr, ctx, st, out);
    if (!spec || spec->release_branch != e.branch || card->second != spec->request_column) continue;
    card->second = spec->shipped_column;
    moved.insert(*n);
    out.push_back(MoveCard{ctx.repo.repo, ctx.repo.backport.board, *n, spec->shipped_column});
  }
  return out;
}

std::vector<Action> BackportTracker::on_card_removed(const Event& event, const CardRemoved& e, WorkflowContext& ctx,
                                                     RepoState& st) {
  if (e.board != ctx.repo.backport.board || e.pr_number == 0) return {};
  if (event.actor == ctx.bot.bot_handle) return {};
  if (!st.loaded) load(ctx, st);
  auto card = st.cards.find(e.pr_number);
  if (card == st.cards.end()) return {};
  auto column = card->second;
  st.cards.erase(card);

  auto pr = ctx.forge.pr_snapshot(ctx.repo.repo, e.pr_number);
  std::vector<Action> out;
  auto spec = spec_for(pr, ctx, st, out);
  if (!spec || column != spec->request_column) return out;
  out.push_back(SetMilestone{ctx.repo.repo, e.pr_number, spec->rejection_milestone});
  out.push_back(PostComment{ctx.repo.repo, e.pr_number, ctx.repo.templates.backport_rejection});
  return out;
}

std::vector<Action> BackportTracker::handle(const Event& event, WorkflowContext& ctx) {
  auto& st = state_[ctx.repo.repo];
  if (const auto* e = event.as<PrClosed>()) return on_pr_merged(event, *e, ctx, st);
  if (const auto* e = event.as<PushToBranch>()) return on_release_push(*e, ctx, st);
  if (const auto* e = event.as<CardRemoved>()) return on_card_removed(event, *e, ctx, st);
  return {};
}

std::vector<Action> BackportTracker::on_failed(const Action& action, const ActionResult&, WorkflowContext& ctx) {
  // Our view of the board is now suspect; re-read it on next use.
  if (std::holds_alternative<AddCardToColumn>(action) || std::holds_alternative<MoveCard>(action))
    state_[ctx.repo.repo].loaded = false;
  return {};
}

}  // namespace forgebot::backport_tracker
