#pragma once

// ForgePort over the GitHub and GitLab web APIs. Reads of a PR use one
// GraphQL query; mutations use REST and check current state first, so a
// repeated action reports Noop.

#include <chrono>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "forgebot/engine.hpp"
#include "forgebot/forge_port.hpp"
#include "forgebot/settings.hpp"
#include "json.hpp"

namespace forgebot::live {

struct HttpRequest {
  std::string method;
  std::string path;  // relative to the transport's base URL, with query
  std::vector<std::pair<std::string, std::string>> headers;
  std::string body;
};

struct HttpResponse {
  int status = 0;
  std::string body;
};

// Throws TransportError when no response was obtained.
class HttpTransport {
 public:
  virtual ~HttpTransport() = default;
  virtual HttpResponse send(const HttpRequest& request) = 0;
};

// cpp-httplib client for a base URL such as https://api.github.com or
// https://ghe.example.com/api/v3.
std::unique_ptr<HttpTransport> make_http_transport(const std::string& base_url,
                                                   std::chrono::seconds timeout = std::chrono::seconds(30));

std::string percent_encode(std::string_view s);

struct Credentials {
  std::string github_token;
  std::string gitlab_token;
};

// Reads the tokens named by the config from the environment.
Credentials credentials_from_env(const SecretRefs& refs);

class LiveForge final : public ForgePort {
 public:
  // A null sleeper sleeps for real.
  LiveForge(const BotConfig& config, Credentials creds, std::unique_ptr<HttpTransport> github,
            std::unique_ptr<HttpTransport> gitlab, const Clock& clock, RetryPolicy retry = {},
            Sleeper sleeper = nullptr);

  PrSnapshot pr_snapshot(const RepoId& repo, int number) const override;
  bool is_team_member(std::string_view org, std::string_view team, std::string_view user) const override;
  std::vector<int> open_prs(const RepoId& repo, std::string_view base_branch) const override;
  std::optional<Sha> branch_head(const RepoId& repo, std::string_view branch) const override;
  // Needs a git transport; always throws NotSupported.
  CommitGraph fetch_graph(const RepoId& repo) const override;
  JobOutcome job_outcome(const RepoId& mirror, std::int64_t job_id) const override;
  std::vector<BoardCard> board_cards(const RepoId& repo, int board) const override;
  std::optional<Timestamp> label_added_at(const RepoId& repo, int number, std::string_view label) const override;

  ActionResult apply(const Action& action) override;

  static constexpr std::chrono::seconds kTeamCacheTtl{60};

 private:
  HttpResponse call(Provider provider, const std::string& method, const std::string& path,
                    const nlohmann::json* body = nullptr) const;
  nlohmann::json get_json(Provider provider, const std::string& path) const;
  nlohmann::json graphql(const std::string& query, const nlohmann::json& variables) const;

  std::string issue_path(const RepoId& repo, int number) const;
  std::vector<std::pair<std::int64_t, std::string>> columns(int board) const;
  std::vector<std::tuple<std::int64_t, int, std::string>> cards(int board) const;  // (card id, pr, column)

  ActionResult apply_github(const Action& action);
  ActionResult apply_gitlab(const Action& action);
  ActionResult mutate(Provider provider, const std::string& method, const std::string& path,
                      const nlohmann::json& body);

  std::string bot_login_;
  std::map<RepoId, LabelPrefixes> prefixes_;
  Credentials creds_;
  std::unique_ptr<HttpTransport> github_;
  std::unique_ptr<HttpTransport> gitlab_;
  const Clock& clock_;
  RetryPolicy retry_;
  Sleeper sleeper_;

  mutable std::mutex cache_mu_;
  mutable std::map<std::tuple<std::string, std::string, std::string>, std::pair<Timestamp, bool>> team_cache_;
};

// Submits scripts to an external minimizer service by POSTing
// {"token": ..., "script": ...} to `url`.
class HttpJobRunner final : public JobRunnerPort {
 public:
  HttpJobRunner(std::unique_ptr<HttpTransport> transport, std::string path);
  ActionResult submit(const std::string& token, const std::string& script) override;

 private:
  std::unique_ptr<HttpTransport> transport_;
  std::string path_;
};

}  // namespace forgebot::live
