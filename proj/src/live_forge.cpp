#include "forgebot/live_forge.hpp"

#include <cstdlib>
#include <thread>

#include "forgebot/text.hpp"
#include "httplib.h"

namespace forgebot::live {

using nlohmann::json;

namespace {

class HttplibTransport final : public HttpTransport {
 public:
  HttplibTransport(const std::string& base_url, std::chrono::seconds timeout) {
    // httplib wants scheme://host[:port]; anything after that is a path prefix.
    auto scheme_end = base_url.find("://");
    auto path_start = base_url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
    origin_ = base_url.substr(0, path_start);
    if (path_start != std::string::npos) prefix_ = base_url.substr(path_start);
    while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
    client_ = std::make_unique<httplib::Client>(origin_);
    client_->set_connection_timeout(timeout);
    client_->set_read_timeout(timeout);
    client_->set_write_timeout(timeout);
  }

  HttpResponse send(const HttpRequest& req) override {
    httplib::Headers headers;
    std::string content_type = "application/json";
    for (const auto& [k, v] : req.headers) {
      if (text::iequals(k, "Content-Type")) content_type = v;
      else headers.emplace(k, v);
    }
    auto path = prefix_ + req.path;
    std::lock_guard lock(mu_);
    httplib::Result res;
    if (req.method == "GET") res = client_->Get(path, headers);
    else if (req.method == "POST") res = client_->Post(path, headers, req.body, content_type);
    else if (req.method == "PUT") res = client_->Put(path, headers, req.body, content_type);
    else if (req.method == "PATCH") res = client_->Patch(path, headers, req.body, content_type);
    else if (req.method == "DELETE") res = client_->Delete(path, headers, req.body, content_type);
    else throw InvalidInput("unsupported method " + req.method);
    if (!res) throw TransportError(req.method + " " + origin_ + path + ": " + httplib::to_string(res.error()));
    return {res->status, res->body};
  }

 private:
  std::string origin_;
  std::string prefix_;
  std::unique_ptr<httplib::Client> client_;
  std::mutex mu_;
};

std::string error_message(const HttpResponse& r) {
  try {
    auto j = json::parse(r.body);
    if (j.contains("message")) return j["message"].get<std::string>();
  } catch (const std::exception&) {
  }
  return text::truncate_utf8(r.body, 200);
}

CiVerdict ci_from_rollup(const json& commits) {
  if (!commits.is_object() || commits["nodes"].empty()) return CiVerdict::None;
  const auto& rollup = commits["nodes"][0]["commit"]["statusCheckRollup"];
  if (rollup.is_null()) return CiVerdict::None;
  auto s = rollup.value("state", std::string());
  if (s == "SUCCESS") return CiVerdict::Success;
  if (s == "FAILURE" || s == "ERROR") return CiVerdict::Failure;
  return CiVerdict::Pending;
}

int pr_from_content_url(const std::string& url) {
  auto slash = url.rfind('/');
  if (slash == std::string::npos) return 0;
  try {
    return std::stoi(url.substr(slash + 1));
  } catch (const std::exception&) {
    return 0;
  }
}

constexpr const char* kSnapshotQuery = R"(query($owner: String!, $name: String!, $number: Int!) {
  repository(owner: $owner, name: $name) {
    pullRequest(number: $number) {
      number title state merged mergeable
      author { login }
      headRefName headRefOid
      baseRefName baseRef { target { oid } }
      labels(first: 100) { nodes { name } }
      milestone { number title description }
      assignees(first: 50) { nodes { login } }
      latestReviews(first: 100) { nodes { state } }
      commits(last: 1) { nodes { commit { statusCheckRollup { state } } } }
    }
  }
})";

}  // namespace

std::unique_ptr<HttpTransport> make_http_transport(const std::string& base_url, std::chrono::seconds timeout) {
  return std::make_unique<HttplibTransport>(base_url, timeout);
}

std::string percent_encode(std::string_view s) {
  static const char* hex = "0123456789ABCDEF";
  std::string out;
  for (unsigned char c : s) {
    if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
      out += static_cast<char>(c);
    } else {
      out += '%';
      out += hex[c >> 4];
      out += hex[c & 15];
    }
  }
  return out;
}

Credentials credentials_from_env(const SecretRefs& refs) {
  auto env = [](const std::string& name) {
    const char* v = std::getenv(name.c_str());
    return v ? std::string(v) : std::string();
  };
  return {env(refs.github_token), env(refs.gitlab_token)};
}

LiveForge::LiveForge(const BotConfig& config, Credentials creds, std::unique_ptr<HttpTransport> github,
                     std::unique_ptr<HttpTransport> gitlab, const Clock& clock, RetryPolicy retry, Sleeper sleeper)
    : bot_login_(config.bot_handle),
      creds_(std::move(creds)),
      github_(std::move(github)),
      gitlab_(std::move(gitlab)),
      clock_(clock),
      retry_(retry),
      sleeper_(std::move(sleeper)) {
  for (const auto& r : config.repositories) prefixes_[r.repo] = r.label_prefixes;
  if (!sleeper_) sleeper_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

HttpResponse LiveForge::call(Provider provider, const std::string& method, const std::string& path,
                             const json* body) const {
  HttpRequest req;
  req.method = method;
  req.path = path;
  if (body) req.body = body->dump();
  req.headers.emplace_back("User-Agent", bot_login_);
  req.headers.emplace_back("Content-Type", "application/json");
  if (provider == Provider::GitHub) {
    req.headers.emplace_back("Accept", "application/vnd.github+json");
    if (!creds_.github_token.empty()) req.headers.emplace_back("Authorization", "Bearer " + creds_.github_token);
  } else if (!creds_.gitlab_token.empty()) {
    req.headers.emplace_back("PRIVATE-TOKEN", creds_.gitlab_token);
  }
  auto& transport = provider == Provider::GitHub ? github_ : gitlab_;
  if (!transport) throw ConfigurationError("no transport for " + std::string(to_string(provider)));
  return with_retry(
      [&] {
        auto r = transport->send(req);
        if (r.status >= 500 || r.status == 429)
          throw TransportError(method + " " + path + ": HTTP " + std::to_string(r.status));
        return r;
      },
      retry_, sleeper_);
}

json LiveForge::get_json(Provider provider, const std::string& path) const {
  auto r = call(provider, "GET", path);
  if (r.status == 404) throw NotFound("GET " + path + ": not found");
  if (r.status >= 300) throw BotError("GET " + path + ": HTTP " + std::to_string(r.status) + " " + error_message(r));
  return json::parse(r.body);
}

json LiveForge::graphql(const std::string& query, const json& variables) const {
  json body = {{"query", query}, {"variables", variables}};
  auto r = call(Provider::GitHub, "POST", "/graphql", &body);
  if (r.status >= 300) throw BotError("graphql: HTTP " + std::to_string(r.status) + " " + error_message(r));
  auto j = json::parse(r.body);
  if (j.contains("errors") && !j["errors"].empty()) {
    const auto& e = j["errors"][0];
    if (e.value("type", std::string()) == "NOT_FOUND") throw NotFound(e.value("message", std::string("not found")));
    throw BotError("graphql: " + e.value("message", std::string("error")));
  }
  return j.at("data");
}

std::string LiveForge::issue_path(const RepoId& repo, int number) const {
  return "/repos/" + repo.full_name() + "/issues/" + std::to_string(number);
}

PrSnapshot LiveForge::pr_snapshot(const RepoId& repo, int number) const {
  auto data = graphql(kSnapshotQuery, {{"owner", repo.owner()}, {"name", repo.name()}, {"number", number}});
  const auto& p = data["repository"]["pullRequest"];
  if (p.is_null()) throw NotFound("no pull request #" + std::to_string(number) + " in " + repo.full_name());

  LabelPrefixes prefixes;
  if (auto it = prefixes_.find(repo); it != prefixes_.end()) prefixes = it->second;

  PrSnapshot s;
  s.number = p.at("number").get<int>();
  s.title = p.value("title", std::string());
  if (p["author"].is_object()) s.author = p["author"].value("login", std::string());
  s.head = GitRef{repo, p.value("headRefName", std::string()), Sha(p.at("headRefOid").get<std::string>())};
  s.base.repo = repo;
  s.base.branch = p.value("baseRefName", std::string());
  if (p["baseRef"].is_object()) s.base.sha = Sha(p["baseRef"]["target"]["oid"].get<std::string>());
  for (const auto& l : p["labels"]["nodes"]) s.labels.insert(classify_label(l.at("name").get<std::string>(), prefixes));
  if (p["milestone"].is_object())
    s.milestone = Milestone{p["milestone"]["number"].get<int>(), p["milestone"].value("title", std::string()),
                            p["milestone"].value("description", std::string())};
  for (const auto& a : p["assignees"]["nodes"]) s.assignees.insert(a.at("login").get<std::string>());
  for (const auto& r : p["latestReviews"]["nodes"]) {
    auto state = r.value("state", std::string());
    if (state == "APPROVED") ++s.approved_reviews;
    else if (state == "CHANGES_REQUESTED") ++s.changes_requested_reviews;
  }
  s.ci_verdict = ci_from_rollup(p["commits"]);
  auto state = p.value("state", std::string());
  s.state = p.value("merged", false) ? PrState::Merged : state == "OPEN" ? PrState::Open : PrState::Closed;
  auto m = p.value("mergeable", std::string());
  s.mergeable = m == "MERGEABLE" ? Mergeability::Mergeable
                : m == "CONFLICTING" ? Mergeability::Conflicting
                                     : Mergeability::Unknown;
  return s;
}

bool LiveForge::is_team_member(std::string_view org, std::string_view team, std::string_view user) const {
  auto key = std::make_tuple(std::string(org), std::string(team), std::string(user));
  auto now = clock_.now();
  {
    std::lock_guard lock(cache_mu_);
    if (auto it = team_cache_.find(key); it != team_cache_.end() && now - it->second.first < kTeamCacheTtl)
      return it->second.second;
  }
  auto base = "/orgs/" + percent_encode(org) + "/teams/" + percent_encode(team);
  try {
    get_json(Provider::GitHub, base);
  } catch (const NotFound&) {
    throw ConfigurationError("unknown team " + std::string(org) + "/" + std::string(team));
  }
  bool member = false;
  auto r = call(Provider::GitHub, "GET", base + "/memberships/" + percent_encode(user));
  if (r.status == 200) member = json::parse(r.body).value("state", std::string()) == "active";
  else if (r.status != 404) throw BotError("team membership: HTTP " + std::to_string(r.status));
  std::lock_guard lock(cache_mu_);
  team_cache_[key] = {now, member};
  return member;
}

std::vector<int> LiveForge::open_prs(const RepoId& repo, std::string_view base_branch) const {
  std::vector<int> out;
  for (int page = 1;; ++page) {
    auto j = get_json(Provider::GitHub, "/repos/" + repo.full_name() + "/pulls?state=open&per_page=100&base=" +
                                            percent_encode(base_branch) + "&page=" + std::to_string(page));
    for (const auto& p : j) out.push_back(p.at("number").get<int>());
    if (j.size() < 100) break;
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::optional<Sha> LiveForge::branch_head(const RepoId& repo, std::string_view branch) const {
  try {
    if (repo.provider() == Provider::GitHub) {
      auto j = get_json(Provider::GitHub, "/repos/" + repo.full_name() + "/branches/" + percent_encode(branch));
      return Sha(j.at("commit").at("sha").get<std::string>());
    }
    auto j = get_json(Provider::GitLab, "/api/v4/projects/" + percent_encode(repo.full_name()) +
                                            "/repository/branches/" + percent_encode(branch));
    return Sha(j.at("commit").at("id").get<std::string>());
  } catch (const NotFound&) {
    return std::nullopt;
  }
}

CommitGraph LiveForge::fetch_graph(const RepoId& repo) const {
  throw NotSupported("commit history of " + repo.full_name() + " needs a git transport");
}

JobOutcome LiveForge::job_outcome(const RepoId& mirror, std::int64_t job_id) const {
  auto base = "/api/v4/projects/" + percent_encode(mirror.full_name()) + "/jobs/" + std::to_string(job_id);
  auto j = get_json(Provider::GitLab, base);
  JobOutcome o;
  o.job_name = j.value("name", std::string());
  auto status = j.value("status", std::string());
  o.status = status == "success" ? JobStatus::Success : status == "canceled" ? JobStatus::Canceled : JobStatus::Failure;
  o.web_url = j.value("web_url", std::string());
  if (j.contains("artifacts") && j["artifacts"].is_array() && !j["artifacts"].empty())
    o.artifact_links.emplace_back("artifacts", o.web_url + "/artifacts/browse");
  auto trace = call(Provider::GitLab, "GET", base + "/trace");
  if (trace.status == 200) o.log = trace.body;
  return o;
}

std::vector<std::pair<std::int64_t, std::string>> LiveForge::columns(int board) const {
  std::vector<std::pair<std::int64_t, std::string>> out;
  for (const auto& c : get_json(Provider::GitHub, "/projects/" + std::to_string(board) + "/columns?per_page=100"))
    out.emplace_back(c.at("id").get<std::int64_t>(), c.at("name").get<std::string>());
  return out;
}

std::vector<std::tuple<std::int64_t, int, std::string>> LiveForge::cards(int board) const {
  std::vector<std::tuple<std::int64_t, int, std::string>> out;
  for (const auto& [col_id, col_name] : columns(board)) {
    auto j = get_json(Provider::GitHub, "/projects/columns/" + std::to_string(col_id) + "/cards?per_page=100");
    for (const auto& c : j) {
      int pr = pr_from_content_url(c.value("content_url", std::string()));
      if (pr) out.emplace_back(c.at("id").get<std::int64_t>(), pr, col_name);
    }
  }
  return out;
}

std::vector<BoardCard> LiveForge::board_cards(const RepoId&, int board) const {
  std::vector<BoardCard> out;
  for (const auto& [id, pr, column] : cards(board)) out.push_back({board, pr, column});
  return out;
}

std::optional<Timestamp> LiveForge::label_added_at(const RepoId& repo, int number, std::string_view label) const {
  std::optional<Timestamp> at;
  auto j = get_json(Provider::GitHub, issue_path(repo, number) + "/events?per_page=100");
  for (const auto& e : j) {
    if (e.value("event", std::string()) != "labeled" || !e.contains("label")) continue;
    if (e["label"].value("name", std::string()) == label) at = parse_iso8601(e.at("created_at").get<std::string>());
  }
  return at;
}

ActionResult LiveForge::mutate(Provider provider, const std::string& method, const std::string& path,
                               const json& body) {
  auto r = call(provider, method, path, &body);
  if (r.status >= 300)
    return ActionResult::failed(method + " " + path + ": HTTP " + std::to_string(r.status) + " " + error_message(r));
  return ActionResult::applied();
}

ActionResult LiveForge::apply(const Action& action) {
  try {
    if (action_repo(action).provider() == Provider::GitHub) return apply_github(action);
    return apply_gitlab(action);
  } catch (const TransportError&) {
    throw;
  } catch (const BotError& e) {
    return ActionResult::failed(e.what());
  }
}

ActionResult LiveForge::apply_github(const Action& action) {
  const auto gh = Provider::GitHub;
  if (const auto* a = std::get_if<AddLabel>(&action)) {
    for (const auto& l : get_json(gh, issue_path(a->repo, a->number) + "/labels"))
      if (l.at("name") == a->label) return ActionResult::noop("label present");
    return mutate(gh, "POST", issue_path(a->repo, a->number) + "/labels", {{"labels", {a->label}}});
  }
  if (const auto* a = std::get_if<RemoveLabel>(&action)) {
    bool present = false;
    for (const auto& l : get_json(gh, issue_path(a->repo, a->number) + "/labels")) present |= l.at("name") == a->label;
    if (!present) return ActionResult::noop("label absent");
    return mutate(gh, "DELETE", issue_path(a->repo, a->number) + "/labels/" + percent_encode(a->label), json::object());
  }
  if (const auto* a = std::get_if<PostComment>(&action)) {
    auto comments = get_json(gh, issue_path(a->repo, a->number) + "/comments?per_page=100");
    for (auto it = comments.rbegin(); it != comments.rend(); ++it) {
      auto login = (*it)["user"].value("login", std::string());
      if (login != bot_login_ && login != bot_login_ + "[bot]") continue;
      if ((*it).value("body", std::string()) == a->body) return ActionResult::noop("same comment already posted");
      break;
    }
    return mutate(gh, "POST", issue_path(a->repo, a->number) + "/comments", {{"body", a->body}});
  }
  if (const auto* a = std::get_if<UpdateComment>(&action)) {
    auto path = "/repos/" + a->repo.full_name() + "/issues/comments/" + std::to_string(a->comment_id);
    if (get_json(gh, path).value("body", std::string()) == a->body) return ActionResult::noop("unchanged");
    return mutate(gh, "PATCH", path, {{"body", a->body}});
  }
  if (const auto* a = std::get_if<ClosePr>(&action)) {
    auto path = "/repos/" + a->repo.full_name() + "/pulls/" + std::to_string(a->number);
    if (get_json(gh, path).value("state", std::string()) == "closed") return ActionResult::noop("already closed");
    return mutate(gh, "PATCH", path, {{"state", "closed"}});
  }
  if (const auto* a = std::get_if<SetMilestone>(&action)) {
    auto issue = get_json(gh, issue_path(a->repo, a->number));
    std::optional<int> current;
    if (issue["milestone"].is_object()) current = issue["milestone"]["number"].get<int>();
    if (current == a->milestone) return ActionResult::noop("milestone unchanged");
    return mutate(gh, "PATCH", issue_path(a->repo, a->number),
                  {{"milestone", a->milestone ? json(*a->milestone) : json(nullptr)}});
  }
  if (const auto* a = std::get_if<MergePr>(&action)) {
    auto path = "/repos/" + a->repo.full_name() + "/pulls/" + std::to_string(a->number);
    auto pr = get_json(gh, path);
    if (pr.value("merged", false)) return ActionResult::noop("already merged");
    if (pr["mergeable"].is_boolean() && !pr["mergeable"].get<bool>()) return ActionResult::failed("not mergeable");
    auto nl = a->message.find('\n');
    json body = {{"merge_method", "merge"}, {"commit_title", a->message.substr(0, nl)}};
    if (nl != std::string::npos) body["commit_message"] = std::string(text::trim(a->message.substr(nl + 1)));
    auto r = call(gh, "PUT", path + "/merge", &body);
    if (r.status == 405 || r.status == 409) return ActionResult::failed("not mergeable: " + error_message(r));
    if (r.status >= 300) return ActionResult::failed("merge: HTTP " + std::to_string(r.status) + " " + error_message(r));
    // Commits made through the API are signed by the forge itself.
    return ActionResult::applied(a->sign ? "signed by the forge" : "");
  }
  if (std::holds_alternative<PushBranch>(action)) return ActionResult::failed("pushing commits needs a git transport");
  if (const auto* a = std::get_if<DeleteBranch>(&action)) {
    auto r = call(gh, "DELETE", "/repos/" + a->repo.full_name() + "/git/refs/heads/" + percent_encode(a->branch));
    if (r.status == 404 || r.status == 422) return ActionResult::noop("no such branch");
    if (r.status >= 300) return ActionResult::failed("delete branch: HTTP " + std::to_string(r.status));
    return ActionResult::applied();
  }
  if (const auto* a = std::get_if<CreateCheckRun>(&action)) {
    auto existing = get_json(gh, "/repos/" + a->repo.full_name() + "/commits/" + a->sha.str() +
                                     "/check-runs?check_name=" + percent_encode(a->name));
    auto conclusion = text::to_lower(to_string(a->conclusion));
    if (conclusion == "cancelled") conclusion = "cancelled";
    for (const auto& run : existing.value("check_runs", json::array()))
      if (run.value("conclusion", std::string()) == conclusion &&
          run["output"].value("summary", std::string()) == a->summary)
        return ActionResult::noop("identical check run exists");
    json body = {{"name", a->name},
                 {"head_sha", a->sha.str()},
                 {"status", "completed"},
                 {"conclusion", conclusion},
                 {"output", {{"title", a->name}, {"summary", a->summary}}}};
    if (!a->links.empty()) body["details_url"] = a->links.front().second;
    return mutate(gh, "POST", "/repos/" + a->repo.full_name() + "/check-runs", body);
  }
  if (const auto* a = std::get_if<SetCommitStatus>(&action)) {
    auto state = text::to_lower(to_string(a->state));
    auto statuses = get_json(gh, "/repos/" + a->repo.full_name() + "/commits/" + a->sha.str() + "/statuses");
    for (const auto& s : statuses) {
      if (s.value("context", std::string()) != a->context) continue;
      if (s.value("state", std::string()) == state && s.value("target_url", std::string()) == a->target_url)
        return ActionResult::noop("status unchanged");
      break;  // newest first
    }
    return mutate(gh, "POST", "/repos/" + a->repo.full_name() + "/statuses/" + a->sha.str(),
                  {{"state", state}, {"context", a->context}, {"target_url", a->target_url}});
  }
  if (const auto* a = std::get_if<AddCardToColumn>(&action)) {
    for (const auto& [id, pr, column] : cards(a->board)) {
      if (pr != a->pr_number) continue;
      if (column == a->column) return ActionResult::noop("card already there");
      return ActionResult::failed("card is in column " + column);
    }
    for (const auto& [col_id, name] : columns(a->board)) {
      if (name != a->column) continue;
      auto pr = get_json(gh, "/repos/" + a->repo.full_name() + "/pulls/" + std::to_string(a->pr_number));
      return mutate(gh, "POST", "/projects/columns/" + std::to_string(col_id) + "/cards",
                    {{"content_id", pr.at("id")}, {"content_type", "PullRequest"}});
    }
    return ActionResult::failed("no column " + a->column);
  }
  if (const auto* a = std::get_if<MoveCard>(&action)) {
    for (const auto& [id, pr, column] : cards(a->board)) {
      if (pr != a->pr_number) continue;
      if (column == a->column) return ActionResult::noop("card already there");
      for (const auto& [col_id, name] : columns(a->board))
        if (name == a->column)
          return mutate(gh, "POST", "/projects/columns/cards/" + std::to_string(id) + "/moves",
                        {{"position", "top"}, {"column_id", col_id}});
      return ActionResult::failed("no column " + a->column);
    }
    return ActionResult::failed("no card for PR #" + std::to_string(a->pr_number));
  }
  return ActionResult::failed("not a forge action");
}

ActionResult LiveForge::apply_gitlab(const Action& action) {
  if (const auto* a = std::get_if<DeleteBranch>(&action)) {
    auto r = call(Provider::GitLab, "DELETE",
                  "/api/v4/projects/" + percent_encode(a->repo.full_name()) + "/repository/branches/" +
                      percent_encode(a->branch));
    if (r.status == 404) return ActionResult::noop("no such branch");
    if (r.status >= 300) return ActionResult::failed("delete branch: HTTP " + std::to_string(r.status));
    return ActionResult::applied();
  }
  if (std::holds_alternative<PushBranch>(action)) return ActionResult::failed("pushing commits needs a git transport");
  return ActionResult::failed(std::string(action_kind(action)) + " is not supported on GitLab");
}

HttpJobRunner::HttpJobRunner(std::unique_ptr<HttpTransport> transport, std::string path)
    : transport_(std::move(transport)), path_(std::move(path)) {}

ActionResult HttpJobRunner::submit(const std::string& token, const std::string& script) {
  HttpRequest req{"POST", path_, {{"Content-Type", "application/json"}}, json{{"token", token}, {"script", script}}.dump()};
  auto r = transport_->send(req);
  if (r.status == 409) return ActionResult::noop("already submitted");
  if (r.status >= 300) return ActionResult::failed("runner: HTTP " + std::to_string(r.status));
  return ActionResult::applied("submitted");
}

}  // namespace forgebot::live
