#pragma once

// Verify, deduplicate, decode, enqueue. Shared by the HTTP server and the
// scenario runner so both exercise the same path.

#include <functional>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>

#include "forgebot/engine.hpp"
#include "forgebot/gateway.hpp"

namespace forgebot {

enum class IngressOutcome { Queued, Duplicate, Ignored, Unauthorized, Malformed };

std::string_view to_string(IngressOutcome o);

struct IngressResult {
  IngressOutcome outcome = IngressOutcome::Ignored;
  std::string delivery_id;
  std::string detail;
};

class Ingress {
 public:
  Ingress(GatewayConfig config, std::string secret, QueueDispatcher& queue,
          std::size_t ledger_capacity = DeliveryLedger::kDefaultCapacity);

  // Provider webhook. Must carry a valid signature or token.
  IngressResult receive(const RawDelivery& delivery);

  // Runner completion. Signed like a GitHub delivery.
  IngressResult receive_runner(const RawDelivery& delivery);

  // Called once per admitted, verified delivery before decoding.
  void on_admitted(std::function<void(const RawDelivery&)> hook) { hook_ = std::move(hook); }

  void set_log(std::ostream* log) { log_ = log; }

 private:
  void log(const IngressResult& r, std::string_view kind);

  GatewayConfig config_;
  std::string secret_;
  QueueDispatcher& queue_;
  DeliveryLedger ledger_;
  std::function<void(const RawDelivery&)> hook_;
  std::ostream* log_ = nullptr;
  std::mutex log_mu_;
};

}  // namespace forgebot
