#include "forgebot/mock_forge.hpp"

#include <algorithm>

#include "forgebot/crypto.hpp"
#include "forgebot/errors.hpp"

namespace forgebot::mock {

using nlohmann::json;

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

json repository_json(const RepoId& repo) {
  return {{"full_name", repo.full_name()}, {"name", repo.name()}, {"owner", {{"login", repo.owner()}}}};
}

void emit(ForgeState& st, Provider provider, std::string kind, json body) {
  Outgoing out{provider, std::move(kind), "mock-" + std::to_string(st.next_delivery++), std::move(body)};
  st.outbox.push_back(std::move(out));
}

json pull_request_json(const RepoId& repo, const PullRequest& pr) {
  json j = {{"number", pr.number},
            {"title", pr.title},
            {"state", pr.state == PrState::Open ? "open" : "closed"},
            {"merged", pr.state == PrState::Merged},
            {"user", {{"login", pr.author}}},
            {"head", {{"sha", pr.head_sha.str()}, {"ref", pr.head_branch}}},
            {"base", {{"ref", pr.base_branch}, {"repo", repository_json(repo)}}}};
  j["merge_commit_sha"] = pr.merge_commit ? json(pr.merge_commit->str()) : json(nullptr);
  return j;
}

Repo* find_repo(ForgeState& st, const RepoId& id) {
  auto it = st.repos.find(id);
  return it == st.repos.end() ? nullptr : &it->second;
}

const Repo& repo_or_throw(const ForgeState& st, const RepoId& id) {
  auto it = st.repos.find(id);
  if (it == st.repos.end()) throw NotFound("unknown repository " + id.full_name());
  return it->second;
}

PullRequest* find_pr(Repo& r, int number) {
  auto it = r.prs.find(number);
  return it == r.prs.end() ? nullptr : &it->second;
}

bool has_thread(const Repo& r, int number) { return r.prs.count(number) || r.issues.count(number); }

CiVerdict derive_ci(const Repo& r, const PullRequest& pr) {
  bool any = false, failed = false, pending = false;
  for (const auto& run : r.check_runs) {
    if (run.sha != pr.head_sha) continue;
    any = true;
    if (run.conclusion != CheckConclusion::Success) failed = true;
  }
  for (const auto& [key, status] : r.statuses) {
    if (key.first != pr.head_sha) continue;
    any = true;
    if (status.state == StatusState::Pending) pending = true;
    else if (status.state != StatusState::Success) failed = true;
  }
  if (!any) return pr.seeded_ci;
  if (failed) return CiVerdict::Failure;
  if (pending) return CiVerdict::Pending;
  return CiVerdict::Success;
}

ActionResult apply_action(ForgeState& st, Repo& r, const Action& action) {
  return std::visit(
      overloaded{
          [&](const AddLabel& a) {
            auto* pr = find_pr(r, a.number);
            if (!pr) return ActionResult::failed("no such pull request");
            if (a.label.empty()) return ActionResult::failed("empty label");
            if (pr->labels.count(a.label)) return ActionResult::noop("label present");
            pr->labels.insert(a.label);
            pr->label_added[a.label] = st.now;
            return ActionResult::applied();
          },
          [&](const RemoveLabel& a) {
            auto* pr = find_pr(r, a.number);
            if (!pr) return ActionResult::failed("no such pull request");
            if (!pr->labels.erase(a.label)) return ActionResult::noop("label absent");
            pr->label_added.erase(a.label);
            return ActionResult::applied();
          },
          [&](const PostComment& a) {
            if (!has_thread(r, a.number)) return ActionResult::failed("no such issue or pull request");
            for (auto it = r.comments.rbegin(); it != r.comments.rend(); ++it) {
              if (it->number != a.number || it->author != st.bot_login) continue;
              if (it->body == a.body) return ActionResult::noop("identical comment is latest");
              break;
            }
            r.comments.push_back({st.next_comment_id++, a.number, st.bot_login, a.body});
            return ActionResult::applied();
          },
          [&](const UpdateComment& a) {
            auto it = std::find_if(r.comments.begin(), r.comments.end(),
                                   [&](const Comment& c) { return c.id == a.comment_id; });
            if (it == r.comments.end()) return ActionResult::failed("no such comment");
            if (it->body == a.body) return ActionResult::noop("comment unchanged");
            it->body = a.body;
            return ActionResult::applied();
          },
          [&](const ClosePr& a) {
            auto* pr = find_pr(r, a.number);
            if (!pr) return ActionResult::failed("no such pull request");
            if (pr->state != PrState::Open) return ActionResult::noop("already closed");
            pr->state = PrState::Closed;
            emit(st, Provider::GitHub, "pull_request",
                 {{"action", "closed"},
                  {"number", pr->number},
                  {"pull_request", pull_request_json(a.repo, *pr)},
                  {"repository", repository_json(a.repo)},
                  {"sender", {{"login", st.bot_login}}}});
            return ActionResult::applied();
          },
          [&](const SetMilestone& a) {
            auto* pr = find_pr(r, a.number);
            if (!pr) return ActionResult::failed("no such pull request");
            if (a.milestone && !r.milestones.count(*a.milestone)) return ActionResult::failed("no such milestone");
            if (pr->milestone == a.milestone) return ActionResult::noop("milestone unchanged");
            pr->milestone = a.milestone;
            return ActionResult::applied();
          },
          [&](const MergePr& a) {
            auto* pr = find_pr(r, a.number);
            if (!pr) return ActionResult::failed("no such pull request");
            if (pr->state == PrState::Merged) return ActionResult::noop("already merged");
            if (pr->state == PrState::Closed) return ActionResult::failed("pull request is closed");
            auto base = r.branches.find(pr->base_branch);
            if (base == r.branches.end()) return ActionResult::failed("base branch missing");
            if (!st.graph.conflicts(base->second, pr->head_sha).empty())
              return ActionResult::failed("not mergeable");
            Sha before = base->second;
            auto commit = ToyCommit::make({before, pr->head_sha}, {}, a.message);
            st.graph.add(commit);
            base->second = commit.sha;
            pr->state = PrState::Merged;
            pr->merge_commit = commit.sha;
            pr->merge_signed = a.sign;
            emit(st, Provider::GitHub, "pull_request",
                 {{"action", "closed"},
                  {"number", pr->number},
                  {"pull_request", pull_request_json(a.repo, *pr)},
                  {"repository", repository_json(a.repo)},
                  {"sender", {{"login", st.bot_login}}}});
            json commits = json::array();
            for (const auto& c : st.graph.between(before, commit.sha))
              commits.push_back({{"id", c.sha.str()}, {"message", c.message}});
            emit(st, Provider::GitHub, "push",
                 {{"ref", "refs/heads/" + pr->base_branch},
                  {"before", before.str()},
                  {"after", commit.sha.str()},
                  {"commits", commits},
                  {"repository", repository_json(a.repo)},
                  {"sender", {{"login", st.bot_login}}}});
            return ActionResult::applied();
          },
          [&](const PushBranch& a) {
            for (const auto& obj : a.objects) {
              if (st.graph.contains(obj.sha)) continue;
              try {
                st.graph.add(obj);
              } catch (const InvalidInput& e) {
                return ActionResult::failed(std::string("rejected object: ") + e.what());
              }
            }
            if (!st.graph.contains(a.sha)) return ActionResult::failed("unknown object " + a.sha.str());
            auto it = r.branches.find(a.branch);
            if (it != r.branches.end()) {
              if (it->second == a.sha) return ActionResult::noop("branch already at sha");
              if (!a.force && !st.graph.is_ancestor(it->second, a.sha))
                return ActionResult::failed("non-fast-forward");
            }
            r.branches[a.branch] = a.sha;
            return ActionResult::applied();
          },
          [&](const DeleteBranch& a) {
            if (!r.branches.erase(a.branch)) return ActionResult::noop("branch absent");
            return ActionResult::applied();
          },
          [&](const CreateCheckRun& a) {
            CheckRun run{a.sha, a.name, a.conclusion, a.summary, a.links};
            if (std::find(r.check_runs.begin(), r.check_runs.end(), run) != r.check_runs.end())
              return ActionResult::noop("identical check run exists");
            r.check_runs.push_back(std::move(run));
            return ActionResult::applied();
          },
          [&](const SetCommitStatus& a) {
            CommitStatus s{a.state, a.target_url};
            auto key = std::make_pair(a.sha, a.context);
            auto it = r.statuses.find(key);
            if (it != r.statuses.end() && it->second == s) return ActionResult::noop("status unchanged");
            r.statuses[key] = s;
            return ActionResult::applied();
          },
          [&](const AddCardToColumn& a) {
            auto b = r.boards.find(a.board);
            if (b == r.boards.end()) return ActionResult::failed("no such board");
            auto& cols = b->second.columns;
            if (std::find(cols.begin(), cols.end(), a.column) == cols.end())
              return ActionResult::failed("no such column '" + a.column + "'");
            auto card = b->second.cards.find(a.pr_number);
            if (card != b->second.cards.end()) {
              if (card->second == a.column) return ActionResult::noop("card already in column");
              return ActionResult::failed("card already on board in column '" + card->second + "'");
            }
            b->second.cards[a.pr_number] = a.column;
            return ActionResult::applied();
          },
          [&](const MoveCard& a) {
            auto b = r.boards.find(a.board);
            if (b == r.boards.end()) return ActionResult::failed("no such board");
            auto card = b->second.cards.find(a.pr_number);
            if (card == b->second.cards.end()) return ActionResult::failed("no card for pull request");
            auto& cols = b->second.columns;
            if (std::find(cols.begin(), cols.end(), a.column) == cols.end())
              return ActionResult::failed("no such column '" + a.column + "'");
            if (card->second == a.column) return ActionResult::noop("card already in column");
            card->second = a.column;
            return ActionResult::applied();
          },
          [&](const DispatchJob&) { return ActionResult::failed("not a forge action"); },
      },
      action);
}

json links_json(const std::vector<std::pair<std::string, std::string>>& links) {
  json out = json::array();
  for (const auto& [title, url] : links) out.push_back({title, url});
  return out;
}

}  // namespace

ActionResult apply_to(ForgeState& st, const Action& action) {
  auto* repo = find_repo(st, action_repo(action));
  if (!repo) return ActionResult::failed("unknown repository " + action_repo(action).full_name());
  // Work on a copy so a Failed or Noop action leaves the state untouched.
  ForgeState next = st;
  auto result = apply_action(next, *find_repo(next, action_repo(action)), action);
  if (result.status == ActionStatus::Applied) st = std::move(next);
  return result;
}

std::pair<ForgeState, ActionResult> step(const ForgeState& state, const Action& action) {
  ForgeState next = state;
  auto result = apply_to(next, action);
  return {std::move(next), std::move(result)};
}

PrSnapshot snapshot_of(const ForgeState& st, const RepoId& repo, int number) {
  const auto& r = repo_or_throw(st, repo);
  auto it = r.prs.find(number);
  if (it == r.prs.end()) throw NotFound("no pull request #" + std::to_string(number) + " in " + repo.full_name());
  const auto& pr = it->second;
  PrSnapshot s;
  s.number = pr.number;
  s.author = pr.author;
  s.title = pr.title;
  s.head = GitRef{repo, pr.head_branch, pr.head_sha};
  auto base = r.branches.find(pr.base_branch);
  s.base = GitRef{repo, pr.base_branch, base == r.branches.end() ? Sha{} : base->second};
  for (const auto& l : pr.labels) s.labels.insert(classify_label(l, st.prefixes));
  if (pr.milestone) {
    auto m = r.milestones.find(*pr.milestone);
    if (m != r.milestones.end()) s.milestone = m->second;
  }
  s.assignees = pr.assignees;
  s.approved_reviews = pr.approvals;
  s.changes_requested_reviews = pr.changes_requested;
  s.ci_verdict = derive_ci(r, pr);
  s.state = pr.state;
  if (pr.state == PrState::Open && base != r.branches.end() && st.graph.contains(pr.head_sha))
    s.mergeable = st.graph.conflicts(base->second, pr.head_sha).empty() ? Mergeability::Mergeable
                                                                         : Mergeability::Conflicting;
  return s;
}

json to_json(const ForgeState& st) {
  json j;
  j["bot"] = st.bot_login;
  j["now"] = format_iso8601(st.now);
  j["next_comment_id"] = st.next_comment_id;
  json commits = json::array();
  for (const auto& [sha, c] : st.graph.commits()) {
    json parents = json::array();
    for (const auto& p : c.parents) parents.push_back(p.str());
    commits.push_back({{"sha", sha.str()}, {"parents", parents}, {"files", c.files}, {"message", c.message}});
  }
  j["commits"] = commits;
  j["teams"] = st.teams;
  json repos = json::array();
  for (const auto& [id, r] : st.repos) {
    json jr;
    jr["repo"] = std::string(to_string(id.provider())) + ":" + id.full_name();
    json branches = json::object();
    for (const auto& [name, sha] : r.branches) branches[name] = sha.str();
    jr["branches"] = branches;
    json prs = json::array();
    for (const auto& [n, pr] : r.prs) {
      json labels = json::object();
      for (const auto& [l, t] : pr.label_added) labels[l] = format_iso8601(t);
      prs.push_back({{"number", n},
                     {"author", pr.author},
                     {"title", pr.title},
                     {"head_branch", pr.head_branch},
                     {"head", pr.head_sha.str()},
                     {"base", pr.base_branch},
                     {"labels", pr.labels},
                     {"label_added", labels},
                     {"milestone", pr.milestone ? json(*pr.milestone) : json(nullptr)},
                     {"assignees", pr.assignees},
                     {"approvals", pr.approvals},
                     {"changes_requested", pr.changes_requested},
                     {"ci", std::string(to_string(pr.seeded_ci))},
                     {"state", std::string(to_string(pr.state))},
                     {"merge_commit", pr.merge_commit ? json(pr.merge_commit->str()) : json(nullptr)},
                     {"merge_signed", pr.merge_signed}});
    }
    jr["prs"] = prs;
    json issues = json::array();
    for (const auto& [n, is] : r.issues)
      issues.push_back({{"number", n}, {"author", is.author}, {"title", is.title}, {"body", is.body}});
    jr["issues"] = issues;
    json milestones = json::array();
    for (const auto& [n, m] : r.milestones)
      milestones.push_back({{"number", n}, {"title", m.title}, {"description", m.description}});
    jr["milestones"] = milestones;
    json boards = json::array();
    for (const auto& [id_, b] : r.boards) {
      json cards = json::object();
      for (const auto& [pr, col] : b.cards) cards[std::to_string(pr)] = col;
      boards.push_back({{"id", id_}, {"columns", b.columns}, {"cards", cards}});
    }
    jr["boards"] = boards;
    json comments = json::array();
    for (const auto& c : r.comments)
      comments.push_back({{"id", c.id}, {"number", c.number}, {"author", c.author}, {"body", c.body}});
    jr["comments"] = comments;
    json runs = json::array();
    for (const auto& c : r.check_runs)
      runs.push_back({{"sha", c.sha.str()},
                      {"name", c.name},
                      {"conclusion", std::string(to_string(c.conclusion))},
                      {"summary", c.summary},
                      {"links", links_json(c.links)}});
    jr["check_runs"] = runs;
    json statuses = json::array();
    for (const auto& [key, s] : r.statuses)
      statuses.push_back({{"sha", key.first.str()},
                          {"context", key.second},
                          {"state", std::string(to_string(s.state))},
                          {"url", s.target_url}});
    jr["statuses"] = statuses;
    json jobs = json::array();
    for (const auto& [id_, job] : r.jobs)
      jobs.push_back({{"id", id_},
                      {"name", job.job_name},
                      {"status", std::string(to_string(job.status))},
                      {"log", job.log},
                      {"web_url", job.web_url},
                      {"artifacts", links_json(job.artifact_links)},
                      {"script", job.script}});
    jr["jobs"] = jobs;
    repos.push_back(jr);
  }
  j["repos"] = repos;
  return j;
}

std::string digest(const ForgeState& st) {
  return crypto::sha256_hex(to_json(st).dump(-1, ' ', false, json::error_handler_t::replace));
}

// ---------------------------------------------------------------------------
// Seeding

RepoId parse_qualified_repo(const std::string& text) {
  auto colon = text.find(':');
  if (colon == std::string::npos) return RepoId::parse(Provider::GitHub, text);
  return RepoId::parse(parse_provider(text.substr(0, colon)), text.substr(colon + 1));
}

namespace {

JobStatus parse_job_status(const std::string& s) {
  if (s == "success") return JobStatus::Success;
  if (s == "failed" || s == "failure") return JobStatus::Failure;
  if (s == "canceled" || s == "cancelled") return JobStatus::Canceled;
  throw InvalidInput("unknown job status " + s);
}

std::vector<std::pair<std::string, std::string>> parse_links(const json& j) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& l : j) {
    if (l.is_array()) out.emplace_back(l.at(0).get<std::string>(), l.at(1).get<std::string>());
    else out.emplace_back(l.at("name").get<std::string>(), l.at("url").get<std::string>());
  }
  return out;
}

}  // namespace

Sha MockForge::resolve(const std::string& symbol) const {
  auto it = symbols_.find(symbol);
  if (it != symbols_.end()) return it->second;
  if (Sha::is_valid(symbol)) return Sha(symbol);
  throw NotFound("unknown commit symbol '" + symbol + "'");
}

void MockForge::bind_symbol(const std::string& symbol, const Sha& sha) {
  std::lock_guard lock(mu_);
  symbols_[symbol] = sha;
}

void MockForge::seed(const json& doc) {
  std::lock_guard lock(mu_);
  auto& st = state_;
  if (doc.contains("bot")) st.bot_login = doc["bot"].get<std::string>();
  if (doc.contains("now")) st.now = parse_iso8601(doc["now"].get<std::string>());
  if (doc.contains("needs_prefix")) st.prefixes.needs = doc["needs_prefix"].get<std::string>();
  if (doc.contains("kind_prefix")) st.prefixes.kind = doc["kind_prefix"].get<std::string>();

  auto sha_of = [&](const json& v) {
    auto s = v.get<std::string>();
    auto it = symbols_.find(s);
    if (it != symbols_.end()) return it->second;
    if (Sha::is_valid(s)) return Sha(s);
    throw NotFound("unknown commit symbol '" + s + "'");
  };

  for (const auto& c : doc.value("commits", json::array())) {
    std::vector<Sha> parents;
    for (const auto& p : c.value("parents", json::array())) parents.push_back(sha_of(p));
    auto commit = ToyCommit::make(std::move(parents), c.value("files", std::set<std::string>{}),
                                  c.value("message", c.value("id", std::string("commit"))));
    st.graph.add(commit);
    if (c.contains("id")) symbols_[c["id"].get<std::string>()] = commit.sha;
  }
  const auto teams = doc.value("teams", json::object());
  for (const auto& [team, members] : teams.items())
    for (const auto& m : members) st.teams[team].insert(m.get<std::string>());

  for (const auto& jr : doc.value("repos", json::array())) {
    auto id = parse_qualified_repo(jr.at("repo").get<std::string>());
    auto& r = st.repos[id];
    const auto branches = jr.value("branches", json::object());
    for (const auto& [name, sha] : branches.items()) r.branches[name] = sha_of(sha);
    for (const auto& jm : jr.value("milestones", json::array())) {
      Milestone m{jm.at("number").get<int>(), jm.value("title", std::string()), jm.value("description", std::string())};
      r.milestones[m.number] = m;
    }
    for (const auto& jb : jr.value("boards", json::array())) {
      auto& b = r.boards[jb.at("id").get<int>()];
      if (jb.contains("columns")) b.columns = jb["columns"].get<std::vector<std::string>>();
      const auto cards = jb.value("cards", json::object());
      for (const auto& [pr, col] : cards.items())
        b.cards[std::stoi(pr)] = col.get<std::string>();
    }
    for (const auto& ji : jr.value("issues", json::array())) {
      Issue is{ji.at("number").get<int>(), ji.value("author", std::string()), ji.value("title", std::string()),
               ji.value("body", std::string())};
      r.issues[is.number] = is;
    }
    for (const auto& jp : jr.value("prs", json::array())) {
      int n = jp.at("number").get<int>();
      auto& pr = r.prs[n];
      pr.number = n;
      pr.author = jp.value("author", pr.author);
      pr.title = jp.value("title", pr.title);
      pr.head_branch = jp.value("head_branch", "pr-source-" + std::to_string(n));
      if (jp.contains("head")) pr.head_sha = sha_of(jp["head"]);
      pr.base_branch = jp.value("base", pr.base_branch.empty() ? std::string("master") : pr.base_branch);
      for (const auto& l : jp.value("labels", json::array())) {
        auto name = l.get<std::string>();
        pr.labels.insert(name);
        pr.label_added.emplace(name, st.now);
      }
      if (jp.contains("milestone"))
        pr.milestone = jp["milestone"].is_null() ? std::nullopt : std::optional<int>(jp["milestone"].get<int>());
      if (jp.contains("assignees")) pr.assignees = jp["assignees"].get<std::set<std::string>>();
      pr.approvals = jp.value("approvals", pr.approvals);
      pr.changes_requested = jp.value("changes_requested", pr.changes_requested);
      if (jp.contains("ci")) pr.seeded_ci = parse_ci_verdict(jp["ci"].get<std::string>());
      if (jp.contains("state")) pr.state = parse_pr_state(jp["state"].get<std::string>());
    }
    for (const auto& jj : jr.value("jobs", json::array())) {
      JobOutcome o;
      o.job_name = jj.at("name").get<std::string>();
      o.status = parse_job_status(jj.value("status", std::string("success")));
      o.log = jj.value("log", std::string());
      o.web_url = jj.value("web_url", std::string());
      o.artifact_links = parse_links(jj.value("artifacts", json::array()));
      o.script = jj.value("script", std::string());
      r.jobs[jj.at("id").get<std::int64_t>()] = o;
    }
  }
}

void MockForge::observe(Provider provider, const std::string& kind, const json& body) {
  if (provider != Provider::GitHub) return;
  std::lock_guard lock(mu_);
  auto& st = state_;
  RepoId id;
  try {
    id = RepoId::parse(Provider::GitHub, body.at("repository").at("full_name").get<std::string>());
  } catch (const std::exception&) {
    return;
  }
  auto* r = find_repo(st, id);
  if (!r) return;
  auto action = body.value("action", std::string());
  if (kind == "issue_comment") {
    const auto& c = body.at("comment");
    auto cid = c.at("id").get<std::int64_t>();
    auto text = c.value("body", std::string());
    auto it = std::find_if(r->comments.begin(), r->comments.end(), [&](const Comment& x) { return x.id == cid; });
    if (action == "created" && it == r->comments.end())
      r->comments.push_back({cid, body.at("issue").at("number").get<int>(), c.at("user").at("login"), text});
    else if (action == "edited" && it != r->comments.end())
      it->body = text;
  } else if (kind == "issues" && action == "opened") {
    const auto& i = body.at("issue");
    int n = i.at("number").get<int>();
    r->issues[n] = Issue{n, i.at("user").at("login").get<std::string>(), i.value("title", std::string()),
                         i.value("body", std::string())};
  } else if (kind == "project_card" && action == "deleted") {
    auto url = body.at("project_card").value("content_url", std::string());
    auto project = body.at("project_card").value("project_url", std::string());
    try {
      int pr = std::stoi(url.substr(url.rfind('/') + 1));
      int board = std::stoi(project.substr(project.rfind('/') + 1));
      if (auto b = r->boards.find(board); b != r->boards.end()) b->second.cards.erase(pr);
    } catch (const std::exception&) {
    }
  } else if (kind == "push") {
    auto ref = body.value("ref", std::string());
    auto after = body.value("after", std::string());
    if (ref.starts_with("refs/heads/") && Sha::is_valid(after) && st.graph.contains(Sha(after)))
      r->branches[ref.substr(11)] = Sha(after);
  } else if (kind == "pull_request") {
    const auto& p = body.at("pull_request");
    int n = p.at("number").get<int>();
    auto head = p.at("head").value("sha", std::string());
    if ((action == "opened" || action == "reopened") && !r->prs.count(n) && Sha::is_valid(head)) {
      PullRequest pr;
      pr.number = n;
      pr.author = p.value("user", json::object()).value("login", std::string());
      pr.title = p.value("title", std::string());
      pr.head_branch = p.at("head").value("ref", std::string());
      pr.head_sha = Sha(head);
      pr.base_branch = p.at("base").value("ref", std::string("master"));
      r->prs[n] = pr;
    } else if (action == "synchronize" && r->prs.count(n) && Sha::is_valid(head) && st.graph.contains(Sha(head))) {
      r->prs[n].head_sha = Sha(head);
    }
  }
}

void MockForge::set_time(Timestamp now) {
  std::lock_guard lock(mu_);
  state_.now = now;
}

std::vector<Outgoing> MockForge::take_outbox() {
  std::lock_guard lock(mu_);
  return std::exchange(state_.outbox, {});
}

ForgeState MockForge::state() const {
  std::lock_guard lock(mu_);
  return state_;
}

std::string MockForge::digest() const {
  std::lock_guard lock(mu_);
  return mock::digest(state_);
}

PrSnapshot MockForge::pr_snapshot(const RepoId& repo, int number) const {
  std::lock_guard lock(mu_);
  return snapshot_of(state_, repo, number);
}

bool MockForge::is_team_member(std::string_view org, std::string_view team, std::string_view user) const {
  std::lock_guard lock(mu_);
  auto it = state_.teams.find(std::string(org) + "/" + std::string(team));
  if (it == state_.teams.end())
    throw ConfigurationError("unknown team " + std::string(org) + "/" + std::string(team));
  return it->second.count(std::string(user)) != 0;
}

std::vector<int> MockForge::open_prs(const RepoId& repo, std::string_view base_branch) const {
  std::lock_guard lock(mu_);
  std::vector<int> out;
  for (const auto& [n, pr] : repo_or_throw(state_, repo).prs)
    if (pr.state == PrState::Open && pr.base_branch == base_branch) out.push_back(n);
  return out;
}

std::optional<Sha> MockForge::branch_head(const RepoId& repo, std::string_view branch) const {
  std::lock_guard lock(mu_);
  const auto& r = repo_or_throw(state_, repo);
  auto it = r.branches.find(std::string(branch));
  if (it == r.branches.end()) return std::nullopt;
  return it->second;
}

CommitGraph MockForge::fetch_graph(const RepoId& repo) const {
  std::lock_guard lock(mu_);
  repo_or_throw(state_, repo);
  return state_.graph;
}

JobOutcome MockForge::job_outcome(const RepoId& mirror, std::int64_t job_id) const {
  std::lock_guard lock(mu_);
  const auto& r = repo_or_throw(state_, mirror);
  auto it = r.jobs.find(job_id);
  if (it == r.jobs.end()) throw NotFound("no job " + std::to_string(job_id) + " in " + mirror.full_name());
  return it->second;
}

std::vector<BoardCard> MockForge::board_cards(const RepoId& repo, int board) const {
  std::lock_guard lock(mu_);
  const auto& r = repo_or_throw(state_, repo);
  auto b = r.boards.find(board);
  if (b == r.boards.end()) throw NotFound("no board " + std::to_string(board));
  std::vector<BoardCard> out;
  for (const auto& [pr, col] : b->second.cards) out.push_back({board, pr, col});
  return out;
}

std::optional<Timestamp> MockForge::label_added_at(const RepoId& repo, int number, std::string_view label) const {
  std::lock_guard lock(mu_);
  const auto& r = repo_or_throw(state_, repo);
  auto pr = r.prs.find(number);
  if (pr == r.prs.end()) throw NotFound("no pull request #" + std::to_string(number));
  auto it = pr->second.label_added.find(std::string(label));
  if (it == pr->second.label_added.end()) return std::nullopt;
  return it->second;
}

ActionResult MockForge::apply(const Action& action) {
  std::lock_guard lock(mu_);
  return apply_to(state_, action);
}

// ---------------------------------------------------------------------------

ActionResult MockRunner::submit(const std::string& token, const std::string& script) {
  std::lock_guard lock(mu_);
  if (!seen_tokens_.insert(token).second) return ActionResult::noop("already submitted");
  ++submitted_;
  Completion c{token, default_reduction, std::nullopt};
  for (const auto& [needle, result] : canned_) {
    if (script.find(needle) == std::string::npos) continue;
    c = result;
    c.token = token;
    break;
  }
  pending_.push_back(std::move(c));
  return ActionResult::applied("submitted");
}

void MockRunner::canned(std::string script_substring, Completion result) {
  std::lock_guard lock(mu_);
  canned_.emplace_back(std::move(script_substring), std::move(result));
}

std::vector<MockRunner::Completion> MockRunner::take_completions() {
  std::lock_guard lock(mu_);
  return std::exchange(pending_, {});
}

std::size_t MockRunner::submitted() const {
  std::lock_guard lock(mu_);
  return submitted_;
}

}  // namespace forgebot::mock
