#include <gtest/gtest.h>

#include "forgebot/backport_tracker.hpp"
#include "forgebot/ci_bridge.hpp"
#include "forgebot/merge_service.hpp"
#include "forgebot/minimizer_gateway.hpp"
#include "forgebot/pr_hygiene.hpp"

using namespace forgebot;

namespace {

const RepoId kRepo(Provider::GitHub, "coq", "coq");

Timestamp t0() { return parse_iso8601("2021-01-04T00:00:00Z"); }

// Satisfies the default policy when commented on by "mia" (a member).
PrSnapshot good_pr() {
  PrSnapshot pr;
  pr.number = 9;
  pr.author = "ivan";
  pr.title = "Fix printing";
  pr.head = {kRepo, "fix", Sha(std::string(40, 'a'))};
  pr.base = {kRepo, "master", Sha(std::string(40, 'b'))};
  pr.labels = {classify_label("kind: fix")};
  pr.milestone = Milestone{12, "8.13", ""};
  pr.assignees = {"mia"};
  pr.approved_reviews = 1;
  pr.ci_verdict = CiVerdict::Success;
  pr.mergeable = Mergeability::Mergeable;
  return pr;
}

}  // namespace

// Each of the eleven bits breaks exactly one requirement; the reported set
// must be exactly the broken ones, in declaration order.
TEST(MergePolicy, ExhaustiveOverAllRequirementSubsets) {
  using merge_service::ViolationCode;
  const ViolationCode order[] = {ViolationCode::NotMaintainer, ViolationCode::HasNeedsLabel,
                                 ViolationCode::NoKindLabel,   ViolationCode::NoMilestone,
                                 ViolationCode::NoAssignee,    ViolationCode::InsufficientReviews,
                                 ViolationCode::ChangesRequested, ViolationCode::WrongBase,
                                 ViolationCode::CiNotGreen,    ViolationCode::Conflict,
                                 ViolationCode::SelfMerge};
  MergePolicy policy;
  policy.forbid_self_merge = true;
  for (unsigned mask = 0; mask < (1u << 11); ++mask) {
    auto bit = [&](int i) { return (mask >> i) & 1u; };
    auto pr = good_pr();
    std::string commenter = "mia";
    bool member = !bit(0);
    if (bit(1)) pr.labels.insert(classify_label("needs: rebase"));
    if (bit(2)) pr.labels.erase(classify_label("kind: fix"));
    if (bit(3)) pr.milestone.reset();
    if (bit(4)) pr.assignees.clear();
    if (bit(5)) pr.approved_reviews = 0;
    if (bit(6)) pr.changes_requested_reviews = 2;
    if (bit(7)) pr.base.branch = "v8.12";
    if (bit(8)) pr.ci_verdict = (mask & 1u) ? CiVerdict::Pending : CiVerdict::Failure;
    if (bit(9)) pr.mergeable = Mergeability::Conflicting;
    if (bit(10)) commenter = pr.author;

    std::vector<ViolationCode> expected;
    for (int i = 0; i < 11; ++i)
      if (bit(i)) expected.push_back(order[i]);
    std::vector<ViolationCode> got;
    for (const auto& v : merge_service::evaluate_policy(pr, commenter, member, policy)) got.push_back(v.code);
    ASSERT_EQ(got, expected) << "mask " << mask;
  }
}

TEST(MergePolicy, UnknownMergeabilityIsNotAConflict) {
  auto pr = good_pr();
  pr.mergeable = Mergeability::Unknown;
  EXPECT_TRUE(merge_service::evaluate_policy(pr, "mia", true, MergePolicy{}).empty());
}

TEST(MergePolicy, CommentListsEveryViolation) {
  auto pr = good_pr();
  pr.milestone.reset();
  pr.assignees.clear();
  auto v = merge_service::evaluate_policy(pr, "mia", true, MergePolicy{});
  auto body = merge_service::violation_comment("mia", v);
  EXPECT_NE(body.find("@mia"), std::string::npos);
  EXPECT_NE(body.find("no milestone is set"), std::string::npos);
  EXPECT_NE(body.find("no assignee is set"), std::string::npos);
}

TEST(MergeService, ParseCommand) {
  using merge_service::parse_merge_command;
  EXPECT_TRUE(parse_merge_command("@coqbot merge now", "coqbot"));
  EXPECT_TRUE(parse_merge_command("LGTM\n  @coqbot MERGE NOW  \nthanks", "coqbot"));
  EXPECT_FALSE(parse_merge_command("@coqbot merge now please", "coqbot"));
  EXPECT_FALSE(parse_merge_command("@coqbot2 merge now", "coqbot"));
  EXPECT_FALSE(parse_merge_command("@Coqbot merge now", "coqbot"));
  EXPECT_FALSE(parse_merge_command("please @coqbot merge now", "coqbot"));
  EXPECT_FALSE(parse_merge_command("", "coqbot"));
}

TEST(MergeService, MessageTemplate) {
  auto pr = good_pr();
  pr.assignees = {"zoe", "amy"};
  Templates t;
  EXPECT_EQ(merge_service::merge_message(pr, t.merge_message),
            "Merge PR #9: Fix printing\n\nReviewed-by: amy\nReviewed-by: zoe");
  pr.assignees.clear();
  EXPECT_EQ(merge_service::merge_message(pr, t.merge_message), "Merge PR #9: Fix printing");
}

TEST(MergeService, ExecuteIsSignedMergeCommit) {
  auto acts = merge_service::execute(good_pr(), Templates{}.merge_message);
  ASSERT_EQ(acts.size(), 1u);
  const auto* m = std::get_if<MergePr>(&acts[0]);
  ASSERT_TRUE(m);
  EXPECT_TRUE(m->sign);
  EXPECT_EQ(m->number, 9);
}

TEST(MergeService, TeamOf) {
  MergePolicy p;
  EXPECT_EQ(merge_service::team_of(p, kRepo), std::make_pair(std::string("coq"), std::string("maintainers")));
  p.authorized_team = "math-comp/core";
  EXPECT_EQ(merge_service::team_of(p, kRepo), std::make_pair(std::string("math-comp"), std::string("core")));
}

// ---------------------------------------------------------------------------

TEST(Hygiene, SyncOutcomeLabelsAndClears) {
  pr_hygiene::StaleStates states;
  auto pr = good_pr();
  auto acts = pr_hygiene::on_sync_outcome(pr, true, t0(), states);
  ASSERT_EQ(acts.size(), 1u);
  EXPECT_TRUE(std::holds_alternative<AddLabel>(acts[0]));
  EXPECT_EQ(states.at(9).labeled_since, t0());

  pr.labels.insert(classify_label(kNeedsRebase));
  EXPECT_TRUE(pr_hygiene::on_sync_outcome(pr, true, t0() + days(3), states).empty());
  EXPECT_EQ(states.at(9).labeled_since, t0());

  acts = pr_hygiene::on_sync_outcome(pr, false, t0() + days(4), states);
  ASSERT_EQ(acts.size(), 1u);
  EXPECT_TRUE(std::holds_alternative<RemoveLabel>(acts[0]));
  EXPECT_TRUE(states.empty());
}

TEST(Hygiene, LabelFoundAfterRestartUsesTimeline) {
  pr_hygiene::StaleStates states;
  auto pr = good_pr();
  pr.labels.insert(classify_label(kNeedsRebase));
  pr_hygiene::on_sync_outcome(pr, true, t0() + days(10), states, t0());
  EXPECT_EQ(states.at(9).labeled_since, t0());
}

// Property: for any warn/grace pair, scanning hourly emits the warning at the
// first scan at or past warn_after, the closure at the first scan at or past
// warn + grace, and nothing twice.
TEST(Hygiene, StaleScanTimingProperty) {
  Templates tpl;
  for (int warn = 1; warn <= 5; ++warn)
    for (int grace = 1; grace <= 5; ++grace) {
      StaleSettings s{days(warn), days(grace), std::chrono::hours(1)};
      pr_hygiene::StaleStates states{{9, {9, t0(), std::nullopt}}};
      std::optional<Timestamp> warned, closed;
      int comments = 0;
      for (auto now = t0(); now <= t0() + days(12); now += std::chrono::hours(1)) {
        for (const auto& a : pr_hygiene::stale_scan(states, kRepo, now, s, tpl)) {
          if (std::holds_alternative<PostComment>(a)) ++comments;
          if (std::holds_alternative<ClosePr>(a)) {
            ASSERT_FALSE(closed);
            closed = now;
          } else if (!warned) {
            warned = now;
          }
        }
        // Idempotent within one instant.
        if (!states.empty()) {
          auto copy = states;
          auto again = pr_hygiene::stale_scan(copy, kRepo, now, s, tpl);
          ASSERT_TRUE(again.empty());
        }
      }
      ASSERT_TRUE(warned && closed);
      EXPECT_EQ(*warned, t0() + days(warn));
      EXPECT_EQ(*closed, t0() + days(warn + grace));
      EXPECT_EQ(comments, 2);
    }
}

TEST(Hygiene, StaleTemplatesFilled) {
  pr_hygiene::StaleStates states{{9, {9, t0(), std::nullopt}}};
  StaleSettings s{days(30), days(15), days(1)};
  auto w = pr_hygiene::stale_scan(states, kRepo, t0() + days(30), s, Templates{});
  ASSERT_EQ(w.size(), 1u);
  auto body = std::get<PostComment>(w[0]).body;
  EXPECT_NE(body.find("more than 30 days"), std::string::npos);
  EXPECT_NE(body.find("in 15 days"), std::string::npos);
}

// ---------------------------------------------------------------------------

TEST(CiBridge, SummaryPrefersHighestPriorityPattern) {
  std::string log;
  for (int i = 0; i < 100; ++i) log += "line " + std::to_string(i) + "\n";
  log += "make: *** [all] Error 2\n";
  log += "Error: tactic failed\n";
  auto s = ci_bridge::summarize_failure(log, ci_bridge::default_error_patterns());
  EXPECT_EQ(s.substr(0, 6), "Error:");
}

TEST(CiBridge, SummaryWindowAndFallback) {
  std::string log;
  for (int i = 0; i < 100; ++i) log += "line " + std::to_string(i) + "\n";
  auto tail = ci_bridge::summarize_failure(log, ci_bridge::default_error_patterns());
  EXPECT_EQ(tail.substr(0, 7), "line 60");
  EXPECT_EQ(std::count(tail.begin(), tail.end(), '\n'), 39);

  std::string with_error = "a\nError: x\n" + log;
  auto ex = ci_bridge::summarize_failure(with_error, ci_bridge::default_error_patterns());
  EXPECT_EQ(ex.substr(0, 8), "Error: x");
  EXPECT_EQ(std::count(ex.begin(), ex.end(), '\n'), 39);
}

TEST(CiBridge, SummaryByteCap) {
  std::string big(100 * 1024, 'x');
  auto s = ci_bridge::summarize_failure(big, {});
  EXPECT_LE(s.size(), ci_bridge::kMaxExcerptBytes);
}

TEST(CiBridge, PlanSyncAndMapping) {
  CommitGraph g;
  auto root = ToyCommit::make({}, {"r"}, "root");
  auto base = ToyCommit::make({root.sha}, {"b"}, "base");
  auto head = ToyCommit::make({root.sha}, {"h"}, "head");
  auto clash = ToyCommit::make({root.sha}, {"b"}, "clash");
  for (const auto& c : {root, base, head, clash}) g.add(c);
  MirrorMapping mm{kRepo, RepoId(Provider::GitLab, "coq", "coq"), "pr-"};

  auto plan = ci_bridge::plan_sync(g, mm, 7, head.sha, base.sha);
  const auto* cand = std::get_if<ci_bridge::Candidate>(&plan);
  ASSERT_TRUE(cand);
  EXPECT_EQ(cand->commit.parents, (std::vector<Sha>{base.sha, head.sha}));
  EXPECT_EQ(cand->push.branch, "pr-7");
  EXPECT_TRUE(cand->push.force);
  EXPECT_EQ(cand->push.sha, cand->commit.sha);

  auto bad = ci_bridge::plan_sync(g, mm, 8, clash.sha, base.sha);
  ASSERT_TRUE(std::holds_alternative<ci_bridge::Conflict>(bad));
  EXPECT_EQ(std::get<ci_bridge::Conflict>(bad).files, std::set<std::string>{"b"});

  ci_bridge::CandidateRecords recs{{7, {7, head.sha, base.sha, cand->commit.sha, t0()}}};
  auto o = ci_bridge::map_to_origin(recs, cand->commit.sha);
  ASSERT_TRUE(o);
  EXPECT_EQ(o->first, 7);
  EXPECT_EQ(o->second, head.sha);
  EXPECT_FALSE(ci_bridge::map_to_origin(recs, head.sha));
}

TEST(CiBridge, ReportOnOriginWithDocsLinks) {
  JobOutcome out;
  out.job_name = "doc:refman";
  out.status = JobStatus::Success;
  out.web_url = "https://gitlab.com/coq/coq/-/jobs/1";
  out.artifact_links = {{"refman", "https://coq.gitlab.io/-/coq/-/jobs/1/artifacts/index.html"}};
  Sha origin(std::string(40, 'c'));
  auto acts = ci_bridge::report(out, kRepo, origin, {"doc:refman"}, ci_bridge::default_error_patterns());
  ASSERT_FALSE(acts.empty());
  const auto* run = std::get_if<CreateCheckRun>(&acts[0]);
  ASSERT_TRUE(run);
  EXPECT_EQ(run->sha, origin);
  EXPECT_EQ(run->repo, kRepo);
  EXPECT_EQ(run->conclusion, CheckConclusion::Success);
  EXPECT_FALSE(run->links.empty());
}

// ---------------------------------------------------------------------------

TEST(Backport, DirectiveParsing) {
  using backport_tracker::parse_milestone_metadata;
  auto s = parse_milestone_metadata("Release 8.12\ncoqbot: backport to v8.12");
  ASSERT_TRUE(s);
  EXPECT_EQ(s->release_branch, "v8.12");
  EXPECT_EQ(s->request_column, "Backport requested");
  EXPECT_FALSE(s->rejection_milestone);

  s = parse_milestone_metadata(
      "coqbot: backport to v8.13 (shipped column: Done; rejection milestone: 14; request inclusion column: Todo)");
  ASSERT_TRUE(s);
  EXPECT_EQ(s->shipped_column, "Done");
  EXPECT_EQ(s->request_column, "Todo");
  EXPECT_EQ(s->rejection_milestone, std::optional<int>(14));

  EXPECT_FALSE(parse_milestone_metadata("no directive here"));
  EXPECT_FALSE(parse_milestone_metadata("otherbot: backport to v1", "coqbot"));
  EXPECT_TRUE(parse_milestone_metadata("mybot: backport to v1", "mybot"));
}

TEST(Backport, MalformedDirectivesThrow) {
  using backport_tracker::DirectiveError;
  using backport_tracker::parse_milestone_metadata;
  EXPECT_THROW(parse_milestone_metadata("coqbot: port to v1"), DirectiveError);
  EXPECT_THROW(parse_milestone_metadata("coqbot: backport to"), DirectiveError);
  EXPECT_THROW(parse_milestone_metadata("coqbot: backport to v1 (rejection milestone: x)"), DirectiveError);
  EXPECT_THROW(parse_milestone_metadata("coqbot: backport to v1 (color: red)"), DirectiveError);
  EXPECT_THROW(parse_milestone_metadata("coqbot: backport to v1 (shipped column: A"), DirectiveError);
  EXPECT_THROW(parse_milestone_metadata("coqbot: backport to v1 (shipped column: Backport requested)"),
               DirectiveError);
}

TEST(Backport, ShippedPr) {
  Sha merge(std::string(40, 'd'));
  std::map<Sha, int> merges{{merge, 100}};
  EXPECT_EQ(backport_tracker::shipped_pr("Merge PR #42: Fix", merges), std::optional<int>(42));
  EXPECT_EQ(backport_tracker::shipped_pr("Fix\n\n(cherry picked from commit " + merge.str() + ")", merges),
            std::optional<int>(100));
  EXPECT_FALSE(backport_tracker::shipped_pr("Fix\n\n(cherry picked from commit " + std::string(40, 'e') + ")", merges));
  EXPECT_FALSE(backport_tracker::shipped_pr("Unrelated", merges));
}

// ---------------------------------------------------------------------------

TEST(Minimizer, CommandParsing) {
  using minimizer_gateway::parse_minimize_command;
  using minimizer_gateway::UsageError;
  auto s = parse_minimize_command("Please:\n@coqbot minimize\n```coq\nGoal True.\nProof. auto. Qed.\n```", "coqbot");
  ASSERT_TRUE(s);
  EXPECT_EQ(*s, "Goal True.\nProof. auto. Qed.");
  EXPECT_FALSE(parse_minimize_command("no command", "coqbot"));
  EXPECT_FALSE(parse_minimize_command("@coqbotx minimize\n```\nx\n```", "coqbot"));
  EXPECT_THROW(parse_minimize_command("@coqbot minimize", "coqbot"), UsageError);
  EXPECT_THROW(parse_minimize_command("@coqbot minimize\n```\n\n```", "coqbot"), UsageError);
  EXPECT_THROW(parse_minimize_command("@coqbot minimize\n```\nGoal True.", "coqbot"), UsageError);
}

TEST(Minimizer, TriggerCommandRoundTrips) {
  for (std::string script : {"Goal True.", "a\nb\n  c", "has ``` inside\nx", "````\nfour"}) {
    auto cmd = minimizer_gateway::trigger_command("coqbot", script);
    auto back = minimizer_gateway::parse_minimize_command(cmd, "coqbot");
    ASSERT_TRUE(back) << script;
    EXPECT_EQ(*back, script);
  }
}

TEST(Minimizer, RequestIdDistinguishesInputs) {
  using minimizer_gateway::request_id;
  auto a = request_id(kRepo, 1, 5, "s");
  EXPECT_EQ(a, request_id(kRepo, 1, 5, "s"));
  EXPECT_NE(a, request_id(kRepo, 1, 6, "s"));
  EXPECT_NE(a, request_id(kRepo, 2, 5, "s"));
  EXPECT_NE(a, request_id(kRepo, 1, 5, "t"));
}
