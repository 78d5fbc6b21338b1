#include "forgebot/model.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <ctime>

#include "forgebot/errors.hpp"
#include "forgebot/text.hpp"

namespace forgebot {

std::string format_iso8601(Timestamp t) {
  std::time_t tt = t.time_since_epoch().count();
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

Timestamp parse_iso8601(std::string_view text) {
  std::tm tm{};
  std::string s(text);
  const char* end = strptime(s.c_str(), "%Y-%m-%dT%H:%M:%S", &tm);
  if (!end || (*end != '\0' && *end != 'Z')) throw InvalidInput("bad timestamp: " + s);
  return Timestamp(std::chrono::seconds(timegm(&tm)));
}

Duration parse_duration(std::string_view text) {
  auto t = text::trim(text);
  if (t.empty()) throw InvalidInput("empty duration");
  std::int64_t mult = 1;
  switch (t.back()) {
    case 'd': mult = 86400; break;
    case 'h': mult = 3600; break;
    case 'm': mult = 60; break;
    case 's': mult = 1; break;
    default: mult = 0;
  }
  if (mult) t.remove_suffix(1);
  else mult = 1;
  std::int64_t n = 0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), n);
  if (ec != std::errc{} || ptr != t.data() + t.size() || n < 0)
    throw InvalidInput("bad duration: " + std::string(text));
  return Duration(n * mult);
}

std::string format_duration(Duration d) {
  auto n = d.count();
  if (n != 0 && n % 86400 == 0) return std::to_string(n / 86400) + "d";
  if (n != 0 && n % 3600 == 0) return std::to_string(n / 3600) + "h";
  if (n != 0 && n % 60 == 0) return std::to_string(n / 60) + "m";
  return std::to_string(n) + "s";
}

std::string_view to_string(Provider p) { return p == Provider::GitHub ? "github" : "gitlab"; }

Provider parse_provider(std::string_view text) {
  if (text == "github") return Provider::GitHub;
  if (text == "gitlab") return Provider::GitLab;
  throw InvalidInput("unknown provider: " + std::string(text));
}

namespace {

bool valid_identifier(std::string_view s) {
  return !s.empty() && std::none_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

}  // namespace

RepoId::RepoId(Provider provider, std::string owner, std::string name)
    : provider_(provider), owner_(std::move(owner)), name_(std::move(name)) {
  if (!valid_identifier(owner_) || !valid_identifier(name_))
    throw InvalidInput("invalid repository id '" + owner_ + "/" + name_ + "'");
}

RepoId RepoId::parse(Provider provider, std::string_view full_name) {
  auto slash = full_name.rfind('/');
  if (slash == std::string_view::npos)
    throw InvalidInput("repository must be owner/name: " + std::string(full_name));
  return RepoId(provider, std::string(full_name.substr(0, slash)), std::string(full_name.substr(slash + 1)));
}

bool Sha::is_valid(std::string_view hex) {
  return hex.size() == 40 && std::all_of(hex.begin(), hex.end(), [](char c) {
           return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f');
         });
}

Sha::Sha(std::string_view hex) : hex_(hex) {
  if (!is_valid(hex)) throw InvalidInput("not a full commit sha: '" + hex_ + "'");
}

Label classify_label(std::string_view name, const LabelPrefixes& prefixes) {
  if (name.empty()) throw InvalidInput("label name is empty");
  Label l{std::string(name), LabelCategory::Other};
  if (!prefixes.needs.empty() && name.starts_with(prefixes.needs))
    l.category = LabelCategory::Needs;
  else if (!prefixes.kind.empty() && name.starts_with(prefixes.kind))
    l.category = LabelCategory::Kind;
  return l;
}

std::string_view to_string(CiVerdict v) {
  switch (v) {
    case CiVerdict::Pending: return "PENDING";
    case CiVerdict::Success: return "SUCCESS";
    case CiVerdict::Failure: return "FAILURE";
    case CiVerdict::None: return "NONE";
  }
  return "NONE";
}

std::string_view to_string(PrState s) {
  switch (s) {
    case PrState::Open: return "OPEN";
    case PrState::Closed: return "CLOSED";
    case PrState::Merged: return "MERGED";
  }
  return "OPEN";
}

CiVerdict parse_ci_verdict(std::string_view text) {
  auto t = text::to_lower(text);
  if (t == "pending") return CiVerdict::Pending;
  if (t == "success") return CiVerdict::Success;
  if (t == "failure") return CiVerdict::Failure;
  if (t == "none") return CiVerdict::None;
  throw InvalidInput("unknown ci verdict: " + std::string(text));
}

PrState parse_pr_state(std::string_view text) {
  auto t = text::to_lower(text);
  if (t == "open") return PrState::Open;
  if (t == "closed") return PrState::Closed;
  if (t == "merged") return PrState::Merged;
  throw InvalidInput("unknown pr state: " + std::string(text));
}

bool PrSnapshot::has_label(std::string_view name) const {
  return std::any_of(labels.begin(), labels.end(), [&](const Label& l) { return l.name == name; });
}

bool PrSnapshot::has_category(LabelCategory c) const {
  return std::any_of(labels.begin(), labels.end(), [&](const Label& l) { return l.category == c; });
}

}  // namespace forgebot
