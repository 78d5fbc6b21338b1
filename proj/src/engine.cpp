#include "forgebot/engine.hpp"

#include <sstream>

#include "forgebot/errors.hpp"
#include "json.hpp"

namespace forgebot {

Timestamp SystemClock::now() const {
  return std::chrono::time_point_cast<std::chrono::seconds>(std::chrono::system_clock::now());
}

Timestamp ManualClock::now() const {
  std::lock_guard lock(mu_);
  return now_;
}

void ManualClock::set(Timestamp t) {
  std::lock_guard lock(mu_);
  now_ = t;
}

void ManualClock::advance(Duration d) {
  std::lock_guard lock(mu_);
  now_ += d;
}

// ---------------------------------------------------------------------------

void Transcript::append(DispatchRecord record) {
  std::lock_guard lock(mu_);
  records_.push_back(std::move(record));
}

std::vector<DispatchRecord> Transcript::records() const {
  std::lock_guard lock(mu_);
  return records_;
}

std::vector<Action> Transcript::actions() const {
  std::lock_guard lock(mu_);
  std::vector<Action> out;
  for (const auto& rec : records_)
    for (const auto& run : rec.runs)
      for (const auto& a : run.actions) out.push_back(a.action);
  return out;
}

std::size_t Transcript::size() const {
  std::lock_guard lock(mu_);
  return records_.size();
}

void Transcript::clear() {
  std::lock_guard lock(mu_);
  records_.clear();
}

std::string render_record(const DispatchRecord& rec) {
  std::ostringstream out;
  out << "event " << rec.event.delivery_id << ' ' << to_string(rec.event.kind()) << ' '
      << rec.event.repo.full_name();
  if (!rec.event.actor.empty()) out << " actor=" << rec.event.actor;
  out << '\n';
  for (const auto& run : rec.runs) {
    out << "  workflow " << run.workflow;
    if (run.failed) out << " FAILED " << nlohmann::json(run.error).dump();
    out << '\n';
    for (const auto& n : run.notes) out << "    note " << n << '\n';
    for (const auto& a : run.actions) {
      out << "    " << describe(a.action) << " -> " << to_string(a.result.status);
      if (a.result.status == ActionStatus::Failed) out << ' ' << nlohmann::json(a.result.detail).dump();
      out << '\n';
    }
  }
  return out.str();
}

std::string Transcript::render() const {
  std::lock_guard lock(mu_);
  std::string out;
  for (const auto& rec : records_) out += render_record(rec);
  return out;
}

// ---------------------------------------------------------------------------

Engine::Engine(ForgePort& forge, BotConfig config, const Clock& clock, JobRunnerPort* runner)
    : forge_(forge), config_(std::move(config)), clock_(clock), runner_(runner) {}

void Engine::add(std::unique_ptr<Workflow> workflow) { workflows_.push_back(std::move(workflow)); }

void Engine::schedule(std::string workflow, Duration period) {
  if (period < std::chrono::minutes(1)) throw InvalidInput("schedule period must be at least one minute");
  bool known = false;
  for (const auto& wf : workflows_) known = known || wf->name() == workflow;
  if (!known) throw InvalidInput("no workflow named '" + workflow + "'");
  std::lock_guard lock(schedule_mu_);
  schedule_.push_back({std::move(workflow), period, clock_.now()});
}

ActionResult Engine::execute(const Action& action) {
  try {
    if (const auto* job = std::get_if<DispatchJob>(&action)) {
      if (!runner_) return ActionResult::failed("no job runner configured");
      return runner_->submit(job->token, job->script);
    }
    return forge_.apply(action);
  } catch (const std::exception& e) {
    return ActionResult::failed(e.what());
  }
}

void Engine::log_action(Timestamp now, const RepoId& repo, std::string_view wf, const Action& a,
                        const ActionResult& r) {
  if (!log_) return;
  std::lock_guard lock(log_mu_);
  *log_ << "ts=" << format_iso8601(now) << " repo=" << repo.full_name() << " wf=" << wf
        << " action=" << action_kind(a) << " result=" << to_string(r.status) << '\n';
}

void Engine::run_workflow(Workflow& wf, const Event& event, const RepoConfig& repo, Timestamp now,
                          WorkflowRun& run) {
  WorkflowContext ctx{forge_, config_, repo, now, run.notes};
  std::vector<Action> actions;
  try {
    actions = wf.handle(event, ctx);
  } catch (const std::exception& e) {
    run.failed = true;
    run.error = e.what();
    return;
  }
  std::vector<Action> follow_ups;
  for (auto& a : actions) {
    auto result = execute(a);
    log_action(now, repo.repo, wf.name(), a, result);
    if (result.status == ActionStatus::Failed) {
      try {
        auto more = wf.on_failed(a, result, ctx);
        follow_ups.insert(follow_ups.end(), more.begin(), more.end());
      } catch (const std::exception& e) {
        run.failed = true;
        run.error = e.what();
      }
    }
    run.actions.push_back({std::move(a), std::move(result)});
  }
  for (auto& a : follow_ups) {
    auto result = execute(a);
    log_action(now, repo.repo, wf.name(), a, result);
    run.actions.push_back({std::move(a), std::move(result)});
  }
}

DispatchRecord Engine::dispatch(const Event& event) {
  DispatchRecord record{event, {}};
  const auto* repo = config_.find(event.repo);
  if (!repo) return record;
  const auto* tick = event.as<ClockTick>();
  Timestamp now = tick ? tick->now : clock_.now();
  for (auto& wf : workflows_) {
    if (!wf->subscribes(event.kind())) continue;
    if (tick && tick->workflow != wf->name()) continue;
    WorkflowRun run{std::string(wf->name()), {}, {}, false, {}};
    run_workflow(*wf, event, *repo, now, run);
    record.runs.push_back(std::move(run));
  }
  transcript_.append(record);
  return record;
}

std::vector<Event> Engine::due_ticks(Timestamp now) {
  std::vector<ClockTick> due;
  {
    std::lock_guard lock(schedule_mu_);
    if (last_tick_ && now <= *last_tick_) return {};
    last_tick_ = now;
    for (auto& entry : schedule_) {
      if (now - entry.last_fired < entry.period) continue;
      entry.last_fired = now;
      due.push_back({now, entry.workflow});
    }
  }
  std::vector<Event> out;
  for (const auto& t : due) {
    for (const auto& repo : config_.repositories) {
      Event ev;
      ev.delivery_id = "tick-" + t.workflow + "-" + std::to_string(now.time_since_epoch().count()) + "-" +
                       repo.repo.full_name();
      ev.repo = repo.repo;
      ev.payload = t;
      out.push_back(std::move(ev));
    }
  }
  return out;
}

std::vector<DispatchRecord> Engine::tick(Timestamp now) {
  std::vector<DispatchRecord> out;
  for (const auto& ev : due_ticks(now)) out.push_back(dispatch(ev));
  return out;
}

// ---------------------------------------------------------------------------

QueueDispatcher::QueueDispatcher(Engine& engine, std::size_t workers) : engine_(engine) {
  for (std::size_t i = 0; i < workers; ++i) threads_.emplace_back([this] { worker_loop(); });
}

QueueDispatcher::~QueueDispatcher() { stop(); }

void QueueDispatcher::enqueue(Event event) {
  {
    std::lock_guard lock(mu_);
    if (stopping_) throw BotError("dispatcher is stopping");
    auto repo = event.repo;
    auto& q = queues_[repo];
    q.push_back(std::move(event));
    ++in_flight_;
    // A repository is on the ready list at most once and never while busy.
    if (q.size() == 1 && !busy_.count(repo)) ready_.push_back(repo);
  }
  work_cv_.notify_one();
}

bool QueueDispatcher::take(RepoId& repo, Event& event) {
  if (ready_.empty()) return false;
  repo = ready_.front();
  ready_.pop_front();
  auto& q = queues_[repo];
  event = std::move(q.front());
  q.pop_front();
  busy_.insert(repo);
  return true;
}

void QueueDispatcher::finish(const RepoId& repo) {
  busy_.erase(repo);
  --in_flight_;
  if (!queues_[repo].empty()) ready_.push_back(repo);
}

void QueueDispatcher::worker_loop() {
  std::unique_lock lock(mu_);
  for (;;) {
    work_cv_.wait(lock, [this] { return !ready_.empty() || (stopping_ && in_flight_ == 0); });
    RepoId repo;
    Event event;
    if (!take(repo, event)) return;
    lock.unlock();
    engine_.dispatch(event);
    lock.lock();
    finish(repo);
    work_cv_.notify_all();
    if (in_flight_ == 0) idle_cv_.notify_all();
  }
}

void QueueDispatcher::drain() {
  if (threads_.empty()) {
    run_until_idle();
    return;
  }
  std::unique_lock lock(mu_);
  idle_cv_.wait(lock, [this] { return in_flight_ == 0; });
}

void QueueDispatcher::stop() {
  drain();
  {
    std::lock_guard lock(mu_);
    stopping_ = true;
  }
  work_cv_.notify_all();
  for (auto& t : threads_)
    if (t.joinable()) t.join();
  threads_.clear();
}

std::size_t QueueDispatcher::run_until_idle() {
  std::size_t handled = 0;
  std::unique_lock lock(mu_);
  RepoId repo;
  Event event;
  while (take(repo, event)) {
    lock.unlock();
    engine_.dispatch(event);
    lock.lock();
    finish(repo);
    ++handled;
  }
  idle_cv_.notify_all();
  return handled;
}

std::size_t QueueDispatcher::pending() const {
  std::lock_guard lock(mu_);
  return in_flight_;
}

}  // namespace forgebot
