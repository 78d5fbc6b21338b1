#pragma once

// Trigger-action core. Routes events to subscribed workflows, hands them a
// read-only view of the forge, and applies the actions they return.

#include <condition_variable>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "forgebot/action.hpp"
#include "forgebot/event.hpp"
#include "forgebot/forge_port.hpp"
#include "forgebot/settings.hpp"

namespace forgebot {

class Clock {
 public:
  virtual ~Clock() = default;
  virtual Timestamp now() const = 0;
};

class SystemClock final : public Clock {
 public:
  Timestamp now() const override;
};

class ManualClock final : public Clock {
 public:
  explicit ManualClock(Timestamp start = {}) : now_(start) {}
  Timestamp now() const override;
  void set(Timestamp t);
  void advance(Duration d);

 private:
  mutable std::mutex mu_;
  Timestamp now_;
};

struct WorkflowContext {
  const ForgeReader& forge;
  const BotConfig& bot;
  const RepoConfig& repo;
  Timestamp now;
  std::vector<std::string>& notes;

  // Free-form trace line recorded in the transcript next to the actions.
  void note(std::string line) const { notes.push_back(std::move(line)); }
};

class Workflow {
 public:
  virtual ~Workflow() = default;

  virtual std::string_view name() const = 0;
  virtual bool subscribes(EventKind kind) const = 0;

  // Must not mutate the forge; every effect is a returned action.
  virtual std::vector<Action> handle(const Event& event, WorkflowContext& ctx) = 0;

  // Follow-up actions after the forge refused one of ours. Follow-ups are not
  // fed back into this hook.
  virtual std::vector<Action> on_failed(const Action&, const ActionResult&, WorkflowContext&) { return {}; }
};

// Workflow-owned state partitioned by repository. Entries are created on
// first access and never move, so the per-repo serialization of the engine
// is enough to make access to one entry race-free.
template <typename T>
class PerRepo {
 public:
  T& operator[](const RepoId& repo) {
    std::lock_guard lock(mu_);
    return map_[repo];
  }

 private:
  std::mutex mu_;
  std::map<RepoId, T> map_;
};

struct AppliedAction {
  Action action;
  ActionResult result;
  bool operator==(const AppliedAction&) const = default;
};

struct WorkflowRun {
  std::string workflow;
  std::vector<AppliedAction> actions;
  std::vector<std::string> notes;
  bool failed = false;
  std::string error;
  bool operator==(const WorkflowRun&) const = default;
};

struct DispatchRecord {
  Event event;
  std::vector<WorkflowRun> runs;
  bool operator==(const DispatchRecord&) const = default;
};

// Thread-safe ordered record of everything the engine did.
class Transcript {
 public:
  void append(DispatchRecord record);
  std::vector<DispatchRecord> records() const;
  std::vector<Action> actions() const;
  std::size_t size() const;
  void clear();

  // Stable multi-line text; identical runs render byte-identically.
  std::string render() const;

 private:
  mutable std::mutex mu_;
  std::vector<DispatchRecord> records_;
};

std::string render_record(const DispatchRecord& record);

class Engine {
 public:
  Engine(ForgePort& forge, BotConfig config, const Clock& clock, JobRunnerPort* runner = nullptr);

  void add(std::unique_ptr<Workflow> workflow);

  // Throws InvalidInput for periods under one minute or unknown workflows.
  void schedule(std::string workflow, Duration period);

  // Runs every subscribed workflow once, in registration order, applying its
  // actions before the next workflow starts. A throwing workflow is marked
  // failed and does not affect the others.
  DispatchRecord dispatch(const Event& event);

  // Emits one ClockTick per due schedule entry per configured repository.
  // Calls with a time not after the previous call emit nothing.
  std::vector<DispatchRecord> tick(Timestamp now);

  // The events tick() would dispatch, for callers that queue them instead.
  std::vector<Event> due_ticks(Timestamp now);

  const BotConfig& config() const { return config_; }
  const Clock& clock() const { return clock_; }
  Transcript& transcript() { return transcript_; }

  // One line per applied action: ts=... repo=... wf=... action=... result=...
  void set_log(std::ostream* log) { log_ = log; }

 private:
  ActionResult execute(const Action& action);
  void run_workflow(Workflow& wf, const Event& event, const RepoConfig& repo, Timestamp now, WorkflowRun& run);
  void log_action(Timestamp now, const RepoId& repo, std::string_view wf, const Action& a, const ActionResult& r);

  struct ScheduleEntry {
    std::string workflow;
    Duration period;
    Timestamp last_fired;
  };

  ForgePort& forge_;
  BotConfig config_;
  const Clock& clock_;
  JobRunnerPort* runner_;
  std::vector<std::unique_ptr<Workflow>> workflows_;
  std::vector<ScheduleEntry> schedule_;
  std::mutex schedule_mu_;
  std::optional<Timestamp> last_tick_;
  Transcript transcript_;
  std::ostream* log_ = nullptr;
  std::mutex log_mu_;
};

// Per-repository FIFO queues in front of an Engine. Events of one repository
// are handled strictly in arrival order, one at a time; distinct repositories
// proceed concurrently on the worker threads. With zero workers nothing runs
// until run_until_idle() is called, which services queues round-robin on the
// calling thread (deterministic test mode).
class QueueDispatcher {
 public:
  QueueDispatcher(Engine& engine, std::size_t workers);
  ~QueueDispatcher();

  QueueDispatcher(const QueueDispatcher&) = delete;
  QueueDispatcher& operator=(const QueueDispatcher&) = delete;

  void enqueue(Event event);

  // Blocks until every queued event has been handled.
  void drain();

  // Drains, then joins the workers. Further enqueues are rejected.
  void stop();

  std::size_t run_until_idle();
  std::size_t pending() const;

 private:
  void worker_loop();
  bool take(RepoId& repo, Event& event);
  void finish(const RepoId& repo);

  Engine& engine_;
  mutable std::mutex mu_;
  std::condition_variable work_cv_;
  std::condition_variable idle_cv_;
  std::map<RepoId, std::deque<Event>> queues_;
  std::deque<RepoId> ready_;
  std::set<RepoId> busy_;
  std::size_t in_flight_ = 0;
  bool stopping_ = false;
  std::vector<std::thread> threads_;
};

}  // namespace forgebot
