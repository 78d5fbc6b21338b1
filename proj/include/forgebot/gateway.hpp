#pragma once

// Webhook edge: signature checks, redelivery dedup, and decoding of provider
// payloads into Events.

#include <chrono>
#include <cstddef>
#include <deque>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "forgebot/errors.hpp"
#include "forgebot/event.hpp"
#include "forgebot/model.hpp"

namespace forgebot {

struct RawDelivery {
  Provider provider = Provider::GitHub;
  std::map<std::string, std::string> headers;  // keys compared case-insensitively
  std::string body;
  Timestamp received_at{};

  // Header lookup ignoring case; empty string when absent.
  std::string header(std::string_view name) const;
};

// GitHub: `header` must be "sha256=" + hex HMAC-SHA256(secret, body).
// Malformed headers yield false. Comparison is constant-time.
bool verify_signature(std::string_view secret, std::string_view body, std::string_view header);

// GitLab: the X-Gitlab-Token header must equal the secret byte for byte.
bool verify_gitlab_token(std::string_view secret, std::string_view token);

// "sha256=<hex>" for `body`; what a provider would send.
std::string sign_body(std::string_view secret, std::string_view body);

// Verifies according to delivery.provider.
bool verify_delivery(std::string_view secret, const RawDelivery& delivery);

// Bounded set of recently seen delivery ids with insertion-order eviction.
// Thread-safe.
class DeliveryLedger {
 public:
  static constexpr std::size_t kDefaultCapacity = 4096;

  explicit DeliveryLedger(std::size_t capacity = kDefaultCapacity);

  // True and records the id if unseen; false for a redelivery.
  bool admit(const std::string& delivery_id);

  std::size_t size() const;
  std::size_t capacity() const { return capacity_; }

 private:
  mutable std::mutex mu_;
  std::size_t capacity_;
  std::deque<std::string> order_;
  std::unordered_set<std::string> seen_;
};

// Which repositories the bot serves.
struct GatewayRepo {
  RepoId source;                      // GitHub repository
  std::optional<RepoId> mirror;       // GitLab mirror, if CI is bridged
  std::set<std::string> base_branches{"master", "main"};
};

struct GatewayConfig {
  std::vector<GatewayRepo> repos;

  const GatewayRepo* find_source(const RepoId& repo) const;
  const GatewayRepo* find_by_mirror(const RepoId& mirror) const;
};

struct DecodeError : BotError {
  DecodeError(Provider p, std::string k, const std::string& what)
      : BotError(std::string(to_string(p)) + " '" + k + "' payload: " + what), provider(p), kind(std::move(k)) {}

  Provider provider;
  std::string kind;
};

// Delivery id from provider headers (X-GitHub-Delivery / X-Gitlab-Event-UUID),
// falling back to a hash of the body.
std::string delivery_id_of(const RawDelivery& delivery);

// Pure mapping of a verified delivery to an Event. Returns nullopt for kinds
// the bot does not handle and for repositories not in `config`. Throws
// DecodeError when the body is not a well-formed payload of its kind.
std::optional<Event> decode_event(const RawDelivery& delivery, const GatewayConfig& config);

// Body of POST /runner/complete:
//   {"token": "...", "repo": "owner/name", "reduced_case": "..."} or
//   {"token": "...", "repo": "owner/name", "failure": "..."}
std::optional<Event> decode_runner_completion(std::string_view body, const GatewayConfig& config);

}  // namespace forgebot
