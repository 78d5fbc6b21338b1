#pragma once

// Per-repository and bot-wide settings as plain values. Loading and
// validation live in config.hpp.

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "forgebot/gateway.hpp"
#include "forgebot/model.hpp"

namespace forgebot {

struct MirrorMapping {
  RepoId source;  // GitHub
  RepoId mirror;  // GitLab
  std::string branch_prefix = "pr-";

  std::string branch_for(int pr_number) const { return branch_prefix + std::to_string(pr_number); }
  bool operator==(const MirrorMapping&) const = default;
};

struct MergePolicy {
  bool require_kind_label = true;
  std::set<LabelCategory> forbidden_categories{LabelCategory::Needs};
  bool require_milestone = true;
  bool require_assignee = true;
  int min_approvals = 1;
  bool forbid_changes_requested = true;
  std::set<std::string> allowed_base_branches{"master"};
  bool require_ci_success = true;
  bool forbid_conflicts = true;
  bool forbid_self_merge = false;
  // "org/team", or just "team" meaning a team of the repository owner.
  std::string authorized_team = "maintainers";

  bool operator==(const MergePolicy&) const = default;
};

struct StaleSettings {
  Duration warn_after = days(30);
  Duration grace = days(30);
  Duration scan_period = days(1);

  bool operator==(const StaleSettings&) const = default;
};

struct Templates {
  // Lines containing {assignees} are repeated once per assignee.
  std::string merge_message = "Merge PR #{number}: {title}\n\nReviewed-by: {assignees}";
  std::string stale_warning =
      "The \"needs: rebase\" label was set more than {days} days ago. If the PR is not rebased "
      "in {grace_days} days, it will be automatically closed.";
  std::string stale_closure =
      "This PR was not rebased after {days} days despite the warning, it is now closed.";
  std::string backport_rejection =
      "This PR was postponed. Please update accordingly the milestone of any issue that this fixes "
      "as this cannot be done automatically.";

  bool operator==(const Templates&) const = default;
};

struct BackportSettings {
  int board = 1;
  std::string request_column = "Backport requested";
  std::string shipped_column = "Shipped";

  bool operator==(const BackportSettings&) const = default;
};

struct RepoConfig {
  RepoId repo;
  std::optional<MirrorMapping> mirror;
  std::set<std::string> base_branches{"master"};
  MergePolicy merge_policy;
  Templates templates;
  StaleSettings stale;
  std::set<std::string> docs_jobs;
  std::set<std::string> reverse_dependency_jobs;
  BackportSettings backport;
  LabelPrefixes label_prefixes;
  // Empty means the built-in error patterns.
  std::vector<std::string> error_patterns;

  bool operator==(const RepoConfig& o) const;
};

// Secrets are referenced by environment-variable name only.
struct SecretRefs {
  std::string webhook_secret = "BOT_WEBHOOK_SECRET";
  std::string github_token = "BOT_GITHUB_TOKEN";
  std::string gitlab_token = "BOT_GITLAB_TOKEN";

  bool operator==(const SecretRefs&) const = default;
};

struct BotConfig {
  std::string bot_handle = "coqbot";
  std::string listen = "127.0.0.1:8080";
  std::vector<RepoConfig> repositories;
  SecretRefs secrets;
  std::string github_api = "https://api.github.com";
  std::string gitlab_api = "https://gitlab.com";
  std::optional<std::string> runner_url;

  const RepoConfig* find(const RepoId& repo) const;
  GatewayConfig gateway() const;

  bool operator==(const BotConfig&) const = default;
};

}  // namespace forgebot
