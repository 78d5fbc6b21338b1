#include "forgebot/ingress.hpp"

namespace forgebot {

std::string_view to_string(IngressOutcome o) {
  switch (o) {
    case IngressOutcome::Queued: return "queued";
    case IngressOutcome::Duplicate: return "duplicate";
    case IngressOutcome::Ignored: return "ignored";
    case IngressOutcome::Unauthorized: return "unauthorized";
    case IngressOutcome::Malformed: return "malformed";
  }
  return "?";
}

Ingress::Ingress(GatewayConfig config, std::string secret, QueueDispatcher& queue, std::size_t ledger_capacity)
    : config_(std::move(config)), secret_(std::move(secret)), queue_(queue), ledger_(ledger_capacity) {}

void Ingress::log(const IngressResult& r, std::string_view kind) {
  if (!log_) return;
  std::lock_guard lock(log_mu_);
  *log_ << "delivery=" << r.delivery_id << " kind=" << kind << " outcome=" << to_string(r.outcome);
  if (!r.detail.empty()) *log_ << " detail=\"" << r.detail << '"';
  *log_ << '\n';
}

IngressResult Ingress::receive(const RawDelivery& d) {
  IngressResult r;
  r.delivery_id = delivery_id_of(d);
  auto kind = d.header(d.provider == Provider::GitHub ? "X-GitHub-Event" : "X-Gitlab-Event");
  if (secret_.empty() || !verify_delivery(secret_, d)) {
    r.outcome = IngressOutcome::Unauthorized;
  } else if (!ledger_.admit(r.delivery_id)) {
    r.outcome = IngressOutcome::Duplicate;
  } else {
    if (hook_) hook_(d);
    try {
      auto ev = decode_event(d, config_);
      if (ev) {
        queue_.enqueue(std::move(*ev));
        r.outcome = IngressOutcome::Queued;
      } else {
        r.outcome = IngressOutcome::Ignored;
      }
    } catch (const std::exception& e) {
      r.outcome = IngressOutcome::Malformed;
      r.detail = e.what();
    }
  }
  log(r, kind);
  return r;
}

IngressResult Ingress::receive_runner(const RawDelivery& d) {
  IngressResult r;
  if (secret_.empty() || !verify_signature(secret_, d.body, d.header("X-Hub-Signature-256"))) {
    r.outcome = IngressOutcome::Unauthorized;
    log(r, "runner");
    return r;
  }
  try {
    auto ev = decode_runner_completion(d.body, config_);
    if (!ev) {
      r.outcome = IngressOutcome::Ignored;
    } else {
      r.delivery_id = ev->delivery_id;
      if (!ledger_.admit(r.delivery_id)) {
        r.outcome = IngressOutcome::Duplicate;
      } else {
        queue_.enqueue(std::move(*ev));
        r.outcome = IngressOutcome::Queued;
      }
    }
  } catch (const std::exception& e) {
    r.outcome = IngressOutcome::Malformed;
    r.detail = e.what();
  }
  log(r, "runner");
  return r;
}

}  // namespace forgebot
