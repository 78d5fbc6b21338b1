#include <gtest/gtest.h>

#include <atomic>
#include <thread>

#include "forgebot/engine.hpp"
#include "forgebot/ingress.hpp"
#include "forgebot/mock_forge.hpp"
#include "criteria.hpp"
#include "forge_contract.hpp"

using namespace forgebot;

namespace {

const RepoId kA(Provider::GitHub, "acme", "a");
const RepoId kB(Provider::GitHub, "acme", "b");

BotConfig two_repos() {
  BotConfig cfg;
  for (const auto& r : {kA, kB}) {
    RepoConfig rc;
    rc.repo = r;
    cfg.repositories.push_back(rc);
  }
  return cfg;
}

Event comment(const RepoId& repo, int n, std::string id) {
  Event ev;
  ev.delivery_id = std::move(id);
  ev.repo = repo;
  ev.actor = "u";
  ev.payload = CommentPosted{n, false, n, "hi"};
  return ev;
}

// Records the comment numbers it sees, per repository, and labels them.
class Recorder : public Workflow {
 public:
  std::string_view name() const override { return "recorder"; }
  bool subscribes(EventKind k) const override { return k == EventKind::CommentPosted || k == EventKind::ClockTick; }
  std::vector<Action> handle(const Event& ev, WorkflowContext& ctx) override {
    if (const auto* t = ev.as<ClockTick>()) {
      std::lock_guard lock(mu);
      ticks.push_back(t->now);
      return {};
    }
    int n = ev.as<CommentPosted>()->number;
    {
      std::lock_guard lock(mu);
      seen[ev.repo].push_back(n);
    }
    std::this_thread::sleep_for(std::chrono::microseconds(200));
    return {AddLabel{ctx.repo.repo, n, "seen"}};
  }

  std::mutex mu;
  std::map<RepoId, std::vector<int>> seen;
  std::vector<Timestamp> ticks;
};

class Thrower : public Workflow {
 public:
  std::string_view name() const override { return "thrower"; }
  bool subscribes(EventKind) const override { return true; }
  std::vector<Action> handle(const Event&, WorkflowContext&) override { throw std::runtime_error("boom"); }
};

// Always refused by the forge; asks for a comment as follow-up.
class Refused : public Workflow {
 public:
  std::string_view name() const override { return "refused"; }
  bool subscribes(EventKind k) const override { return k == EventKind::CommentPosted; }
  std::vector<Action> handle(const Event& ev, WorkflowContext& ctx) override {
    return {ClosePr{ctx.repo.repo, ev.as<CommentPosted>()->number + 1000}};
  }
  std::vector<Action> on_failed(const Action&, const ActionResult& r, WorkflowContext& ctx) override {
    return {PostComment{ctx.repo.repo, 1, "failed: " + r.detail}};
  }
};

// Counts applications and never refuses.
class CountingForge : public ForgePort {
 public:
  PrSnapshot pr_snapshot(const RepoId&, int) const override { throw NotFound("pr"); }
  bool is_team_member(std::string_view, std::string_view, std::string_view) const override { return false; }
  std::vector<int> open_prs(const RepoId&, std::string_view) const override { return {}; }
  std::optional<Sha> branch_head(const RepoId&, std::string_view) const override { return std::nullopt; }
  CommitGraph fetch_graph(const RepoId&) const override { return {}; }
  JobOutcome job_outcome(const RepoId&, std::int64_t) const override { throw NotFound("job"); }
  std::vector<BoardCard> board_cards(const RepoId&, int) const override { return {}; }
  std::optional<Timestamp> label_added_at(const RepoId&, int, std::string_view) const override {
    return std::nullopt;
  }
  ActionResult apply(const Action& a) override {
    if (std::holds_alternative<ClosePr>(a)) return ActionResult::failed("no such PR");
    ++applied;
    return ActionResult::applied();
  }
  std::atomic<int> applied{0};
};

}  // namespace

TEST(Engine, FailingWorkflowDoesNotStopOthers) {
  CountingForge forge;
  ManualClock clock;
  Engine engine(forge, two_repos(), clock);
  engine.add(std::make_unique<Thrower>());
  auto rec_owner = std::make_unique<Recorder>();
  auto* rec = rec_owner.get();
  engine.add(std::move(rec_owner));
  auto r = engine.dispatch(comment(kA, 1, "x"));
  ASSERT_EQ(r.runs.size(), 2u);
  EXPECT_TRUE(r.runs[0].failed);
  EXPECT_EQ(r.runs[0].error, "boom");
  EXPECT_FALSE(r.runs[1].failed);
  EXPECT_EQ(r.runs[1].actions.size(), 1u);
  EXPECT_EQ(rec->seen[kA], std::vector<int>{1});
}

TEST(Engine, RefusalTriggersFollowUp) {
  CountingForge forge;
  ManualClock clock;
  Engine engine(forge, two_repos(), clock);
  engine.add(std::make_unique<Refused>());
  auto r = engine.dispatch(comment(kA, 1, "x"));
  ASSERT_EQ(r.runs.size(), 1u);
  ASSERT_EQ(r.runs[0].actions.size(), 2u);
  EXPECT_EQ(r.runs[0].actions[0].result.status, ActionStatus::Failed);
  EXPECT_EQ(std::get<PostComment>(r.runs[0].actions[1].action).body, "failed: no such PR");
}

TEST(Engine, UnknownRepositoryIsIgnored) {
  CountingForge forge;
  ManualClock clock;
  Engine engine(forge, two_repos(), clock);
  engine.add(std::make_unique<Recorder>());
  auto r = engine.dispatch(comment(RepoId(Provider::GitHub, "x", "y"), 1, "x"));
  EXPECT_TRUE(r.runs.empty());
  EXPECT_EQ(forge.applied, 0);
}

TEST(Engine, ScheduleFiresOncePerPeriodPerRepo) {
  CountingForge forge;
  ManualClock clock(parse_iso8601("2021-01-01T00:00:00Z"));
  Engine engine(forge, two_repos(), clock);
  auto rec_owner = std::make_unique<Recorder>();
  auto* rec = rec_owner.get();
  engine.add(std::move(rec_owner));
  EXPECT_THROW(engine.schedule("nope", days(1)), InvalidInput);
  EXPECT_THROW(engine.schedule("recorder", std::chrono::seconds(5)), InvalidInput);
  engine.schedule("recorder", std::chrono::hours(6));
  auto start = clock.now();
  EXPECT_TRUE(engine.tick(start + std::chrono::hours(5)).empty());
  EXPECT_EQ(engine.tick(start + std::chrono::hours(6)).size(), 2u);
  EXPECT_TRUE(engine.tick(start + std::chrono::hours(6)).empty());  // same instant
  EXPECT_TRUE(engine.tick(start + std::chrono::hours(11)).empty());
  EXPECT_EQ(engine.tick(start + std::chrono::hours(12)).size(), 2u);
  EXPECT_EQ(rec->ticks.size(), 4u);
}

TEST(Queue, PerRepoOrderPreservedWithWorkers) {
  CountingForge forge;
  ManualClock clock;
  Engine engine(forge, two_repos(), clock);
  auto rec_owner = std::make_unique<Recorder>();
  auto* rec = rec_owner.get();
  engine.add(std::move(rec_owner));
  {
    QueueDispatcher q(engine, 4);
    for (int i = 0; i < 100; ++i) {
      q.enqueue(comment(kA, i, "a" + std::to_string(i)));
      q.enqueue(comment(kB, i, "b" + std::to_string(i)));
    }
    q.drain();
    EXPECT_EQ(q.pending(), 0u);
  }
  std::vector<int> expected(100);
  for (int i = 0; i < 100; ++i) expected[i] = i;
  EXPECT_EQ(rec->seen[kA], expected);
  EXPECT_EQ(rec->seen[kB], expected);
  EXPECT_EQ(forge.applied, 200);
}

TEST(Queue, ZeroWorkersRunsOnDemand) {
  CountingForge forge;
  ManualClock clock;
  Engine engine(forge, two_repos(), clock);
  engine.add(std::make_unique<Recorder>());
  QueueDispatcher q(engine, 0);
  q.enqueue(comment(kA, 1, "1"));
  q.enqueue(comment(kB, 2, "2"));
  EXPECT_EQ(q.pending(), 2u);
  EXPECT_EQ(q.run_until_idle(), 2u);
  EXPECT_EQ(engine.transcript().size(), 2u);
  q.stop();
  EXPECT_THROW(q.enqueue(comment(kA, 3, "3")), BotError);
}

// ---------------------------------------------------------------------------

TEST(Ingress, OutcomesForEachPath) {
  CountingForge forge;
  ManualClock clock;
  auto cfg = two_repos();
  Engine engine(forge, cfg, clock);
  QueueDispatcher q(engine, 0);
  Ingress in(cfg.gateway(), "sekrit", q);

  RawDelivery d;
  d.headers["X-GitHub-Event"] = "issue_comment";
  d.headers["X-GitHub-Delivery"] = "d1";
  d.body = R"({"action":"created","issue":{"number":1},"comment":{"id":5,"body":"x"},)"
           R"("repository":{"full_name":"acme/a"},"sender":{"login":"u"}})";
  EXPECT_EQ(in.receive(d).outcome, IngressOutcome::Unauthorized);
  d.headers["X-Hub-Signature-256"] = sign_body("wrong", d.body);
  EXPECT_EQ(in.receive(d).outcome, IngressOutcome::Unauthorized);
  d.headers["X-Hub-Signature-256"] = sign_body("sekrit", d.body);
  EXPECT_EQ(in.receive(d).outcome, IngressOutcome::Queued);
  EXPECT_EQ(in.receive(d).outcome, IngressOutcome::Duplicate);
  EXPECT_EQ(q.pending(), 1u);

  RawDelivery star = d;
  star.headers["X-GitHub-Event"] = "star";
  star.headers["X-GitHub-Delivery"] = "d2";
  EXPECT_EQ(in.receive(star).outcome, IngressOutcome::Ignored);

  RawDelivery bad = d;
  bad.headers["X-GitHub-Delivery"] = "d3";
  bad.body = R"({"action":"created","repository":{"full_name":"acme/a"}})";
  bad.headers["X-Hub-Signature-256"] = sign_body("sekrit", bad.body);
  EXPECT_EQ(in.receive(bad).outcome, IngressOutcome::Malformed);
}

// ---------------------------------------------------------------------------

TEST(MockForge, ContractSuite) {
  auto checks = contract::run_contract([] { return criteria::make_mock_fixture_forge(); }, criteria::mock_fixture());
  ASSERT_FALSE(checks.empty());
  for (const auto& c : checks) EXPECT_TRUE(c.passed) << c.name << ": " << c.detail;
}

TEST(MockForge, StepIsPureAndIdempotent) {
  auto forge = criteria::make_mock_fixture_forge();
  auto s0 = forge->state();
  auto fx = criteria::mock_fixture();
  std::vector<Action> actions{AddLabel{fx.repo, fx.open_pr, "kind: fix"},
                              SetMilestone{fx.repo, fx.open_pr, fx.milestone},
                              PostComment{fx.repo, fx.open_pr, "hello"},
                              AddCardToColumn{fx.repo, fx.board, fx.col_a, fx.open_pr},
                              ClosePr{fx.repo, fx.second_open_pr}};
  for (const auto& a : actions) {
    auto before = s0;
    auto [s1, r1] = mock::step(s0, a);
    EXPECT_EQ(s0, before) << "input mutated by " << describe(a);
    EXPECT_EQ(r1.status, ActionStatus::Applied) << describe(a);
    EXPECT_NE(mock::digest(s1), mock::digest(s0));
    auto [s2, r2] = mock::step(s1, a);
    EXPECT_EQ(r2.status, ActionStatus::Noop) << describe(a);
    EXPECT_EQ(mock::digest(s2), mock::digest(s1));
  }
  auto [s3, r3] = mock::step(s0, AddLabel{fx.repo, fx.missing_pr, "x"});
  EXPECT_EQ(r3.status, ActionStatus::Failed);
  EXPECT_EQ(s3, s0);
}

TEST(MockForge, QualifiedRepoNames) {
  EXPECT_EQ(mock::parse_qualified_repo("gitlab:g/p"), RepoId(Provider::GitLab, "g", "p"));
  EXPECT_EQ(mock::parse_qualified_repo("o/r"), RepoId(Provider::GitHub, "o", "r"));
}
