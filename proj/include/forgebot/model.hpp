#pragma once

// Forge vocabulary shared by every module: repositories, commits, labels,
// milestones and pull-request snapshots. All types are immutable values.

#include <chrono>
#include <compare>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>

namespace forgebot {

using Timestamp = std::chrono::sys_seconds;
using Duration = std::chrono::seconds;

std::string format_iso8601(Timestamp t);
Timestamp parse_iso8601(std::string_view text);

// Parses "30d", "12h", "5m", "90s" or a bare number of seconds.
Duration parse_duration(std::string_view text);
// Inverse of parse_duration using the largest exact unit ("30d", "90m").
std::string format_duration(Duration d);

constexpr Duration days(std::int64_t n) { return std::chrono::hours(24 * n); }

enum class Provider { GitHub, GitLab };

std::string_view to_string(Provider p);
Provider parse_provider(std::string_view text);

class RepoId {
 public:
  RepoId() = default;
  // Throws InvalidInput when owner or name is empty or contains whitespace.
  RepoId(Provider provider, std::string owner, std::string name);

  // "owner/name"; the owner part may itself contain '/' (GitLab subgroups).
  static RepoId parse(Provider provider, std::string_view full_name);

  Provider provider() const { return provider_; }
  const std::string& owner() const { return owner_; }
  const std::string& name() const { return name_; }
  std::string full_name() const { return owner_ + "/" + name_; }

  auto operator<=>(const RepoId&) const = default;
  bool operator==(const RepoId&) const = default;

 private:
  Provider provider_ = Provider::GitHub;
  std::string owner_;
  std::string name_;
};

// Full 40-hex-digit commit id. Abbreviated ids are rejected.
class Sha {
 public:
  Sha() = default;
  explicit Sha(std::string_view hex);

  static bool is_valid(std::string_view hex);

  const std::string& str() const { return hex_; }
  bool empty() const { return hex_.empty(); }

  auto operator<=>(const Sha&) const = default;
  bool operator==(const Sha&) const = default;

 private:
  std::string hex_;
};

struct GitRef {
  RepoId repo;
  std::string branch;
  Sha sha;

  bool operator==(const GitRef&) const = default;
};

enum class LabelCategory { Needs, Kind, Other };

struct LabelPrefixes {
  std::string needs = "needs: ";
  std::string kind = "kind: ";

  bool operator==(const LabelPrefixes&) const = default;
};

struct Label {
  std::string name;
  LabelCategory category = LabelCategory::Other;

  auto operator<=>(const Label& o) const { return name <=> o.name; }
  bool operator==(const Label& o) const { return name == o.name; }
};

// Throws InvalidInput on an empty name.
Label classify_label(std::string_view name, const LabelPrefixes& prefixes = {});

inline const std::string kNeedsRebase = "needs: rebase";

struct Milestone {
  int number = 0;
  std::string title;
  std::string description;

  bool operator==(const Milestone&) const = default;
};

enum class CiVerdict { Pending, Success, Failure, None };
enum class PrState { Open, Closed, Merged };
enum class Mergeability { Unknown, Mergeable, Conflicting };

std::string_view to_string(CiVerdict v);
std::string_view to_string(PrState s);
CiVerdict parse_ci_verdict(std::string_view text);
PrState parse_pr_state(std::string_view text);

struct PrSnapshot {
  int number = 0;
  std::string author;
  std::string title;
  GitRef head;
  GitRef base;
  std::set<Label> labels;
  std::optional<Milestone> milestone;
  std::set<std::string> assignees;
  int approved_reviews = 0;
  int changes_requested_reviews = 0;
  CiVerdict ci_verdict = CiVerdict::None;
  PrState state = PrState::Open;
  Mergeability mergeable = Mergeability::Unknown;

  bool has_label(std::string_view name) const;
  bool has_category(LabelCategory c) const;

  bool operator==(const PrSnapshot&) const = default;
};

}  // namespace forgebot
