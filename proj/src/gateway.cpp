#include "forgebot/gateway.hpp"

#include "forgebot/crypto.hpp"
#include "forgebot/text.hpp"
#include "json.hpp"

namespace forgebot {

using nlohmann::json;

std::string RawDelivery::header(std::string_view name) const {
  for (const auto& [k, v] : headers)
    if (text::iequals(k, name)) return v;
  return {};
}

bool verify_signature(std::string_view secret, std::string_view body, std::string_view header) {
  constexpr std::string_view prefix = "sha256=";
  if (secret.empty() || !header.starts_with(prefix)) return false;
  auto expected = crypto::hmac_sha256_hex(secret, body);
  return crypto::constant_time_equals(header.substr(prefix.size()), expected);
}

bool verify_gitlab_token(std::string_view secret, std::string_view token) {
  if (secret.empty()) return false;
  return crypto::constant_time_equals(secret, token);
}

std::string sign_body(std::string_view secret, std::string_view body) {
  return "sha256=" + crypto::hmac_sha256_hex(secret, body);
}

bool verify_delivery(std::string_view secret, const RawDelivery& d) {
  if (d.provider == Provider::GitHub) return verify_signature(secret, d.body, d.header("X-Hub-Signature-256"));
  return verify_gitlab_token(secret, d.header("X-Gitlab-Token"));
}

DeliveryLedger::DeliveryLedger(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) throw InvalidInput("ledger capacity must be positive");
}

bool DeliveryLedger::admit(const std::string& id) {
  std::lock_guard lock(mu_);
  if (seen_.count(id)) return false;
  if (order_.size() == capacity_) {
    seen_.erase(order_.front());
    order_.pop_front();
  }
  order_.push_back(id);
  seen_.insert(id);
  return true;
}

std::size_t DeliveryLedger::size() const {
  std::lock_guard lock(mu_);
  return order_.size();
}

const GatewayRepo* GatewayConfig::find_source(const RepoId& repo) const {
  for (const auto& r : repos)
    if (r.source == repo) return &r;
  return nullptr;
}

const GatewayRepo* GatewayConfig::find_by_mirror(const RepoId& mirror) const {
  for (const auto& r : repos)
    if (r.mirror && *r.mirror == mirror) return &r;
  return nullptr;
}

std::string delivery_id_of(const RawDelivery& d) {
  auto id = d.header(d.provider == Provider::GitHub ? "X-GitHub-Delivery" : "X-Gitlab-Event-UUID");
  if (!id.empty()) return id;
  return std::string(to_string(d.provider)) + "-" + crypto::sha256_hex(d.body);
}

namespace {

std::vector<PushedCommit> pushed_commits(const json& body) {
  std::vector<PushedCommit> out;
  for (const auto& c : body.value("commits", json::array()))
    out.push_back({Sha(c.at("id").get<std::string>()), c.value("message", std::string())});
  return out;
}

std::optional<JobStatus> gitlab_status(const std::string& s) {
  if (s == "success") return JobStatus::Success;
  if (s == "failed") return JobStatus::Failure;
  if (s == "canceled") return JobStatus::Canceled;
  return std::nullopt;
}

std::optional<EventPayload> decode_github(const std::string& kind, const json& body, const GatewayRepo& repo) {
  auto action = body.value("action", std::string());
  if (kind == "pull_request") {
    const auto& pr = body.at("pull_request");
    int number = pr.at("number").get<int>();
    if (action == "opened" || action == "reopened")
      return PrOpened{number, Sha(pr.at("head").at("sha").get<std::string>()),
                      pr.at("base").at("ref").get<std::string>()};
    if (action == "synchronize") return PrSynchronized{number, Sha(pr.at("head").at("sha").get<std::string>())};
    if (action == "closed") {
      PrClosed c{number, pr.value("merged", false), std::nullopt};
      if (c.merged && pr.contains("merge_commit_sha") && pr["merge_commit_sha"].is_string())
        c.merge_commit = Sha(pr["merge_commit_sha"].get<std::string>());
      return c;
    }
    return std::nullopt;
  }
  if (kind == "issue_comment") {
    const auto& issue = body.at("issue");
    const auto& comment = body.at("comment");
    int number = issue.at("number").get<int>();
    bool on_pr = issue.contains("pull_request");
    auto id = comment.at("id").get<std::int64_t>();
    auto text = comment.value("body", std::string());
    if (action == "created") return CommentPosted{number, on_pr, id, text};
    if (action == "edited") {
      CommentEdited e{number, on_pr, id, text, std::nullopt};
      if (body.contains("changes") && body["changes"].contains("body"))
        e.previous_body = body["changes"]["body"].value("from", std::string());
      return e;
    }
    return std::nullopt;
  }
  if (kind == "issues") {
    if (action != "opened") return std::nullopt;
    const auto& issue = body.at("issue");
    auto text = issue.contains("body") && issue["body"].is_string() ? issue["body"].get<std::string>() : "";
    return IssueOpened{issue.at("number").get<int>(), issue.value("title", std::string()), text};
  }
  if (kind == "push") {
    auto ref = body.at("ref").get<std::string>();
    if (!ref.starts_with("refs/heads/")) return std::nullopt;
    auto after = body.at("after").get<std::string>();
    if (after == std::string(40, '0')) return std::nullopt;  // branch deletion
    auto branch = ref.substr(11);
    if (repo.base_branches.count(branch)) return BaseBranchPushed{branch, Sha(after), pushed_commits(body)};
    return PushToBranch{branch, Sha(after), pushed_commits(body)};
  }
  if (kind == "project_card") {
    if (action != "deleted") return std::nullopt;
    const auto& card = body.at("project_card");
    auto content = card.value("content_url", std::string());
    auto project = card.value("project_url", std::string());
    if (content.empty() || project.empty()) return std::nullopt;  // note cards
    int pr = std::stoi(content.substr(content.rfind('/') + 1));
    int board = std::stoi(project.substr(project.rfind('/') + 1));
    return CardRemoved{board, card.value("id", std::int64_t{0}), pr};
  }
  return std::nullopt;
}

std::optional<EventPayload> decode_gitlab(const std::string& kind, const json& body, const RepoId& mirror) {
  if (kind == "Pipeline Hook") {
    const auto& attrs = body.at("object_attributes");
    auto status = gitlab_status(attrs.at("status").get<std::string>());
    if (!status) return std::nullopt;
    auto id = attrs.at("id").get<std::int64_t>();
    auto url = body.at("project").value("web_url", std::string()) + "/-/pipelines/" + std::to_string(id);
    return PipelineFinished{mirror, id, attrs.value("ref", std::string()), Sha(attrs.at("sha").get<std::string>()),
                            *status, url};
  }
  if (kind == "Job Hook") {
    auto status = gitlab_status(body.at("build_status").get<std::string>());
    if (!status) return std::nullopt;
    return JobFinished{mirror,
                       body.at("build_id").get<std::int64_t>(),
                       body.at("build_name").get<std::string>(),
                       body.value("ref", std::string()),
                       Sha(body.at("sha").get<std::string>()),
                       *status};
  }
  return std::nullopt;
}

}  // namespace

std::optional<Event> decode_event(const RawDelivery& delivery, const GatewayConfig& config) {
  const bool github = delivery.provider == Provider::GitHub;
  auto kind = delivery.header(github ? "X-GitHub-Event" : "X-Gitlab-Event");
  try {
    auto body = json::parse(delivery.body);
    if (!body.is_object()) throw DecodeError(delivery.provider, kind, "body is not an object");
    Event ev;
    ev.delivery_id = delivery_id_of(delivery);
    std::optional<EventPayload> payload;
    if (github) {
      if (!body.contains("repository")) return std::nullopt;  // org-level hooks
      auto repo = RepoId::parse(Provider::GitHub, body["repository"].at("full_name").get<std::string>());
      const auto* cfg = config.find_source(repo);
      if (!cfg) return std::nullopt;
      payload = decode_github(kind, body, *cfg);
      ev.repo = repo;
      if (body.contains("sender")) ev.actor = body["sender"].value("login", std::string());
    } else {
      auto mirror = RepoId::parse(Provider::GitLab, body.at("project").at("path_with_namespace").get<std::string>());
      const auto* cfg = config.find_by_mirror(mirror);
      if (!cfg) return std::nullopt;
      payload = decode_gitlab(kind, body, mirror);
      ev.repo = cfg->source;
      if (body.contains("user")) ev.actor = body["user"].value("username", std::string());
    }
    if (!payload) return std::nullopt;
    ev.payload = std::move(*payload);
    return ev;
  } catch (const DecodeError&) {
    throw;
  } catch (const std::exception& e) {
    throw DecodeError(delivery.provider, kind, e.what());
  }
}

std::optional<Event> decode_runner_completion(std::string_view body_text, const GatewayConfig& config) {
  try {
    auto body = json::parse(body_text);
    auto repo = RepoId::parse(Provider::GitHub, body.at("repo").get<std::string>());
    if (!config.find_source(repo)) return std::nullopt;
    RunnerCompleted done;
    done.token = body.at("token").get<std::string>();
    if (body.contains("reduced_case")) done.reduced_case = body["reduced_case"].get<std::string>();
    else done.failure = body.value("failure", std::string("runner reported no result"));
    Event ev;
    ev.delivery_id = "runner-" + done.token;
    ev.repo = repo;
    ev.actor = "runner";
    ev.payload = std::move(done);
    return ev;
  } catch (const std::exception& e) {
    throw DecodeError(Provider::GitHub, "runner completion", e.what());
  }
}

}  // namespace forgebot
