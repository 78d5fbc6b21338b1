#include <gtest/gtest.h>

#include <deque>

#include "forgebot/live_forge.hpp"

using namespace forgebot;
using namespace forgebot::live;
using nlohmann::json;

namespace {

const RepoId kRepo(Provider::GitHub, "coq", "coq");
const std::string kHead(40, 'a');
const std::string kBase(40, 'b');

// Replies from a script keyed by "METHOD path"; the last reply for a key
// repeats. Unscripted requests get a 404.
class FakeTransport : public HttpTransport {
 public:
  struct Shared {
    std::map<std::string, std::deque<HttpResponse>> script;
    std::vector<HttpRequest> sent;
  };

  explicit FakeTransport(std::shared_ptr<Shared> s) : s_(std::move(s)) {}

  HttpResponse send(const HttpRequest& req) override {
    s_->sent.push_back(req);
    auto it = s_->script.find(req.method + " " + req.path);
    if (it == s_->script.end() || it->second.empty()) return {404, R"({"message":"Not Found"})"};
    auto r = it->second.front();
    if (r.status < 0) throw TransportError("connection reset");
    if (it->second.size() > 1) it->second.pop_front();
    return r;
  }

 private:
  std::shared_ptr<Shared> s_;
};

struct Harness {
  std::shared_ptr<FakeTransport::Shared> gh = std::make_shared<FakeTransport::Shared>();
  std::shared_ptr<FakeTransport::Shared> gl = std::make_shared<FakeTransport::Shared>();
  ManualClock clock{parse_iso8601("2021-01-04T00:00:00Z")};
  std::vector<std::chrono::milliseconds> sleeps;
  std::unique_ptr<LiveForge> forge;

  Harness() {
    BotConfig cfg;
    RepoConfig rc;
    rc.repo = kRepo;
    cfg.repositories.push_back(rc);
    RetryPolicy retry{std::chrono::milliseconds(100), 2, 4};
    forge = std::make_unique<LiveForge>(cfg, Credentials{"ghtok", "gltok"}, std::make_unique<FakeTransport>(gh),
                                        std::make_unique<FakeTransport>(gl), clock, retry,
                                        [this](std::chrono::milliseconds d) { sleeps.push_back(d); });
  }

  void on(const std::string& key, int status, json body) { gh->script[key].push_back({status, body.dump()}); }
  void on_gl(const std::string& key, int status, std::string body) { gl->script[key].push_back({status, body}); }

  std::size_t count(const std::string& method) const {
    std::size_t n = 0;
    for (const auto& r : gh->sent) n += r.method == method;
    return n;
  }
};

json pr_node() {
  return {{"number", 7},
          {"title", "Fix"},
          {"state", "OPEN"},
          {"merged", false},
          {"mergeable", "CONFLICTING"},
          {"author", {{"login", "ivan"}}},
          {"headRefName", "fix"},
          {"headRefOid", kHead},
          {"baseRefName", "master"},
          {"baseRef", {{"target", {{"oid", kBase}}}}},
          {"labels", {{"nodes", {{{"name", "kind: fix"}}, {{"name", "needs: rebase"}}}}}},
          {"milestone", {{"number", 3}, {"title", "8.13"}, {"description", "coqbot: backport to v8.13"}}},
          {"assignees", {{"nodes", {{{"login", "mia"}}}}}},
          {"latestReviews", {{"nodes", {{{"state", "APPROVED"}}, {{"state", "CHANGES_REQUESTED"}}, {{"state", "APPROVED"}}}}}},
          {"commits", {{"nodes", {{{"commit", {{"statusCheckRollup", {{"state", "PENDING"}}}}}}}}}}};
}

}  // namespace

TEST(LiveForge, SnapshotFromGraphql) {
  Harness h;
  h.on("POST /graphql", 200, {{"data", {{"repository", {{"pullRequest", pr_node()}}}}}});
  auto s = h.forge->pr_snapshot(kRepo, 7);
  EXPECT_EQ(s.author, "ivan");
  EXPECT_EQ(s.head.sha, Sha(kHead));
  EXPECT_EQ(s.base.sha, Sha(kBase));
  EXPECT_TRUE(s.has_label("needs: rebase"));
  EXPECT_TRUE(s.has_category(LabelCategory::Kind));
  EXPECT_EQ(s.milestone->number, 3);
  EXPECT_EQ(s.approved_reviews, 2);
  EXPECT_EQ(s.changes_requested_reviews, 1);
  EXPECT_EQ(s.ci_verdict, CiVerdict::Pending);
  EXPECT_EQ(s.mergeable, Mergeability::Conflicting);
  EXPECT_EQ(s.state, PrState::Open);

  const auto& req = h.gh->sent.at(0);
  auto body = json::parse(req.body);
  EXPECT_EQ(body["variables"]["number"], 7);
  bool auth = false;
  for (const auto& [k, v] : req.headers) auth |= k == "Authorization" && v == "Bearer ghtok";
  EXPECT_TRUE(auth);
}

TEST(LiveForge, MissingPrIsNotFound) {
  Harness h;
  h.on("POST /graphql", 200,
       {{"data", {{"repository", {{"pullRequest", nullptr}}}}},
        {"errors", {{{"type", "NOT_FOUND"}, {"message", "Could not resolve to a PullRequest"}}}}});
  EXPECT_THROW(h.forge->pr_snapshot(kRepo, 99), NotFound);
}

TEST(LiveForge, RetriesTransientFailuresWithBackoff) {
  Harness h;
  h.on("GET /repos/coq/coq/branches/master", 502, json::object());
  h.on("GET /repos/coq/coq/branches/master", 429, json::object());
  h.on("GET /repos/coq/coq/branches/master", 200, {{"commit", {{"sha", kBase}}}});
  EXPECT_EQ(h.forge->branch_head(kRepo, "master"), std::optional<Sha>(Sha(kBase)));
  using ms = std::chrono::milliseconds;
  EXPECT_EQ(h.sleeps, (std::vector<ms>{ms(100), ms(200)}));
}

TEST(LiveForge, GivesUpAfterMaxAttempts) {
  Harness h;
  h.gh->script["GET /repos/coq/coq/branches/master"].push_back({-1, ""});
  EXPECT_THROW(h.forge->branch_head(kRepo, "master"), TransportError);
  EXPECT_EQ(h.gh->sent.size(), 4u);
  EXPECT_EQ(h.sleeps.size(), 3u);
}

TEST(LiveForge, MissingBranchIsNullopt) {
  Harness h;
  EXPECT_FALSE(h.forge->branch_head(kRepo, "gone"));
}

TEST(LiveForge, TeamMembershipCachedForAMinute) {
  Harness h;
  h.on("GET /orgs/coq/teams/maintainers", 200, {{"slug", "maintainers"}});
  h.on("GET /orgs/coq/teams/maintainers/memberships/mia", 200, {{"state", "active"}});
  EXPECT_TRUE(h.forge->is_team_member("coq", "maintainers", "mia"));
  EXPECT_FALSE(h.forge->is_team_member("coq", "maintainers", "zed"));
  auto calls = h.gh->sent.size();
  EXPECT_TRUE(h.forge->is_team_member("coq", "maintainers", "mia"));
  EXPECT_EQ(h.gh->sent.size(), calls);
  h.clock.advance(LiveForge::kTeamCacheTtl);
  EXPECT_TRUE(h.forge->is_team_member("coq", "maintainers", "mia"));
  EXPECT_GT(h.gh->sent.size(), calls);
  EXPECT_THROW(h.forge->is_team_member("coq", "nobody", "mia"), ConfigurationError);
}

TEST(LiveForge, AddLabelChecksFirst) {
  Harness h;
  h.on("GET /repos/coq/coq/issues/7/labels", 200, json::array({{{"name", "needs: rebase"}}}));
  h.on("POST /repos/coq/coq/issues/7/labels", 200, json::array());
  EXPECT_EQ(h.forge->apply(AddLabel{kRepo, 7, "needs: rebase"}).status, ActionStatus::Noop);
  EXPECT_EQ(h.count("POST"), 0u);
  EXPECT_EQ(h.forge->apply(AddLabel{kRepo, 7, "kind: fix"}).status, ActionStatus::Applied);
  EXPECT_EQ(json::parse(h.gh->sent.back().body)["labels"][0], "kind: fix");
}

TEST(LiveForge, RemoveLabelEncodesName) {
  Harness h;
  h.on("GET /repos/coq/coq/issues/7/labels", 200, json::array({{{"name", "needs: rebase"}}}));
  h.on("DELETE /repos/coq/coq/issues/7/labels/needs%3A%20rebase", 200, json::array());
  EXPECT_EQ(h.forge->apply(RemoveLabel{kRepo, 7, "needs: rebase"}).status, ActionStatus::Applied);
  EXPECT_EQ(h.forge->apply(RemoveLabel{kRepo, 7, "other"}).status, ActionStatus::Noop);
}

TEST(LiveForge, MergeRefusalIsFailedNotThrown) {
  Harness h;
  h.on("GET /repos/coq/coq/pulls/7", 200, {{"merged", false}, {"state", "open"}, {"head", {{"sha", kHead}}}});
  h.on("PUT /repos/coq/coq/pulls/7/merge", 405, {{"message", "Pull Request is not mergeable"}});
  auto r = h.forge->apply(MergePr{kRepo, 7, "Merge PR #7", true});
  EXPECT_EQ(r.status, ActionStatus::Failed);
  EXPECT_NE(r.detail.find("not mergeable"), std::string::npos);
}

TEST(LiveForge, MergeAlreadyDoneIsNoop) {
  Harness h;
  h.on("GET /repos/coq/coq/pulls/7", 200, {{"merged", true}, {"state", "closed"}});
  EXPECT_EQ(h.forge->apply(MergePr{kRepo, 7, "m", true}).status, ActionStatus::Noop);
}

TEST(LiveForge, PushNeedsGitTransport) {
  Harness h;
  auto r = h.forge->apply(PushBranch{RepoId(Provider::GitLab, "coq", "coq"), "pr-7", Sha(kHead), true, {}});
  EXPECT_EQ(r.status, ActionStatus::Failed);
  EXPECT_THROW(h.forge->fetch_graph(kRepo), NotSupported);
}

TEST(LiveForge, GitlabDeleteBranchUsesPrivateToken) {
  Harness h;
  h.on_gl("DELETE /api/v4/projects/coq%2Fcoq/repository/branches/pr-7", 204, "");
  RepoId mirror(Provider::GitLab, "coq", "coq");
  EXPECT_EQ(h.forge->apply(DeleteBranch{mirror, "pr-7"}).status, ActionStatus::Applied);
  bool token = false;
  for (const auto& [k, v] : h.gl->sent.back().headers) token |= k == "PRIVATE-TOKEN" && v == "gltok";
  EXPECT_TRUE(token);
  EXPECT_EQ(h.forge->apply(DeleteBranch{mirror, "pr-8"}).status, ActionStatus::Noop);
}

TEST(LiveForge, JobOutcomeWithTrace) {
  Harness h;
  RepoId mirror(Provider::GitLab, "coq", "coq");
  h.on_gl("GET /api/v4/projects/coq%2Fcoq/jobs/42", 200,
          json{{"name", "library:ci-x"}, {"status", "failed"}, {"web_url", "https://gitlab.com/coq/coq/-/jobs/42"}}
              .dump());
  h.on_gl("GET /api/v4/projects/coq%2Fcoq/jobs/42/trace", 200, "Error: boom\n");
  auto o = h.forge->job_outcome(mirror, 42);
  EXPECT_EQ(o.job_name, "library:ci-x");
  EXPECT_EQ(o.status, JobStatus::Failure);
  EXPECT_EQ(o.log, "Error: boom\n");
}

TEST(LiveForge, HttpRunnerTreatsConflictAsNoop) {
  auto shared = std::make_shared<FakeTransport::Shared>();
  shared->script["POST /jobs"].push_back({201, "{}"});
  HttpJobRunner runner(std::make_unique<FakeTransport>(shared), "/jobs");
  EXPECT_EQ(runner.submit("t", "Goal True.").status, ActionStatus::Applied);
  EXPECT_EQ(json::parse(shared->sent[0].body)["token"], "t");
  shared->script["POST /jobs"] = {{409, "{}"}};
  EXPECT_EQ(runner.submit("t", "Goal True.").status, ActionStatus::Noop);
}

TEST(LiveForge, PercentEncode) {
  EXPECT_EQ(percent_encode("a b/c:d"), "a%20b%2Fc%3Ad");
  EXPECT_EQ(percent_encode("A-z_0.~"), "A-z_0.~");
}
