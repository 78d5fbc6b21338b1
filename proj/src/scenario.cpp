#include "forgebot/scenario.hpp"

#include <fstream>
#include <regex>
#include <sstream>

#include "forgebot/bot.hpp"
#include "forgebot/config.hpp"
#include "forgebot/ingress.hpp"
#include "forgebot/text.hpp"

namespace forgebot {

using nlohmann::json;

std::string action_line(const AppliedAction& a) {
  std::string line = describe(a.action) + " -> " + std::string(to_string(a.result.status));
  if (a.result.status == ActionStatus::Failed) line += " " + json(a.result.detail).dump();
  return line;
}

bool pattern_matches(std::string_view pattern, std::string_view line) {
  // Split on '*' and find each piece in order.
  std::size_t pos = 0;
  std::size_t start = 0;
  while (start <= pattern.size()) {
    auto star = pattern.find('*', start);
    auto piece = pattern.substr(start, star == std::string_view::npos ? std::string_view::npos : star - start);
    if (!piece.empty()) {
      auto found = line.find(piece, pos);
      if (found == std::string_view::npos) return false;
      pos = found + piece.size();
    }
    if (star == std::string_view::npos) break;
    start = star + 1;
  }
  return true;
}

namespace {

constexpr const char* kSecret = "scenario-secret";

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw InvalidInput("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct StepFailure : BotError {
  using BotError::BotError;
};

std::vector<std::string> words(std::string_view s) {
  std::vector<std::string> out;
  std::istringstream in{std::string(s)};
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

// The text after the first n whitespace-separated words.
std::string rest_after(std::string_view s, std::size_t n) {
  std::size_t i = 0;
  for (std::size_t k = 0; k < n; ++k) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i]))) ++i;
  }
  return std::string(text::trim(s.substr(std::min(i, s.size()))));
}

class Runner {
 public:
  Runner(std::filesystem::path base, ScenarioOptions options, std::string name)
      : base_(std::move(base)), options_(options), name_(std::move(name)) {}

  ScenarioResult run(const std::string& script) {
    ScenarioResult result;
    int lineno = 0;
    bool header = false;
    for (auto raw : text::split_lines(script)) {
      ++lineno;
      auto line = text::trim(raw);
      if (line.empty() || line.front() == '#') continue;
      try {
        if (!header) {
          if (line != "forgebot-scenario 1") throw StepFailure("expected header 'forgebot-scenario 1'");
          header = true;
          continue;
        }
        step(line, lineno);
      } catch (const std::exception& e) {
        result.ok = false;
        result.failures.push_back(name_ + ":" + std::to_string(lineno) + ": " + e.what());
        break;
      }
    }
    if (!header && result.ok) {
      result.ok = false;
      result.failures.push_back(name_ + ": missing header 'forgebot-scenario 1'");
    }
    if (engine_) {
      result.records = engine_->transcript().records();
      result.transcript = engine_->transcript().render();
    }
    for (const auto& rec : result.records)
      for (const auto& run : rec.runs)
        for (const auto& a : run.actions) result.action_lines.push_back(action_line(a));
    result.final_state = forge_.state();
    result.digest = forge_.digest();
    result.transcript += "state " + result.digest + "\n";
    result.deliveries = deliveries_;
    return result;
  }

 private:
  void step(std::string_view line, int lineno) {
    auto w = words(line);
    const auto& cmd = w[0];
    auto need = [&](std::size_t n) {
      if (w.size() < n + 1) throw StepFailure("'" + cmd + "' needs " + std::to_string(n) + " argument(s)");
    };
    if (cmd == "config") {
      need(1);
      if (engine_) throw StepFailure("config must come before any delivery");
      config_ = load_config(base_ / w[1]);
    } else if (cmd == "seed") {
      need(1);
      auto doc = json::parse(read_file(base_ / w[1]));
      forge_.seed(doc);
      if (doc.contains("now")) clock_.set(forge_.state().now);
    } else if (cmd == "deliver") {
      need(1);
      ensure_engine();
      deliver_file(base_ / w[1], name_ + "-" + std::to_string(lineno));
      pump();
    } else if (cmd == "advance") {
      need(1);
      ensure_engine();
      clock_.advance(parse_duration(w[1]));
      forge_.set_time(clock_.now());
      engine_->tick(clock_.now());
      pump();
    } else if (cmd == "capture") {
      need(3);
      auto head = forge_.branch_head(mock::parse_qualified_repo(w[2]), w[3]);
      if (!head) throw StepFailure("no branch " + w[3] + " in " + w[2]);
      forge_.bind_symbol(w[1], *head);
    } else if (cmd == "runner-fail") {
      need(2);
      runner_.canned(w[1], {"", std::nullopt, rest_after(line, 2)});
    } else if (cmd == "expect-action") {
      need(1);
      expect_action(rest_after(line, 1));
    } else if (cmd == "expect-none") {
      need(1);
      expect_none(rest_after(line, 1));
    } else if (cmd == "expect-state") {
      need(1);
      expect_state(line);
    } else {
      throw StepFailure("unknown step '" + cmd + "'");
    }
  }

  void ensure_engine() {
    if (engine_) return;
    if (!config_) throw StepFailure("no config step before the first delivery");
    if (clock_.now() == Timestamp{}) clock_.set(forge_.state().now);
    forge_.set_time(clock_.now());
    engine_ = std::make_unique<Engine>(forge_, *config_, clock_, &runner_);
    engine_->set_log(options_.log);
    install_standard_workflows(*engine_);
    queue_ = std::make_unique<QueueDispatcher>(*engine_, 0);
    ingress_ = std::make_unique<Ingress>(config_->gateway(), kSecret, *queue_);
    ingress_->set_log(options_.log);
    ingress_->on_admitted([this](const RawDelivery& d) {
      auto kind = d.header(d.provider == Provider::GitHub ? "X-GitHub-Event" : "X-Gitlab-Event");
      forge_.observe(d.provider, kind, json::parse(d.body));
    });
  }

  std::string resolve(const std::string& key) {
    if (key == "now") return format_iso8601(clock_.now());
    if (key.rfind("branch:", 0) == 0) {
      auto spec = key.substr(7);
      auto colon = spec.rfind(':');
      if (colon == std::string::npos) throw StepFailure("bad placeholder {{" + key + "}}");
      auto repo = mock::parse_qualified_repo(spec.substr(0, colon));
      auto head = forge_.branch_head(repo, spec.substr(colon + 1));
      if (!head) throw StepFailure("no branch for {{" + key + "}}");
      return head->str();
    }
    return forge_.resolve(key).str();
  }

  void expand(json& j) {
    static const std::regex placeholder(R"(\{\{([^}]+)\}\})");
    if (j.is_string()) {
      auto s = j.get<std::string>();
      if (s.find("{{") == std::string::npos) return;
      std::string out;
      auto begin = std::sregex_iterator(s.begin(), s.end(), placeholder);
      std::size_t last = 0;
      for (auto it = begin; it != std::sregex_iterator(); ++it) {
        out += s.substr(last, it->position() - last);
        out += resolve((*it)[1].str());
        last = it->position() + it->length();
      }
      out += s.substr(last);
      j = out;
    } else if (j.is_array() || j.is_object()) {
      for (auto& v : j) expand(v);
    }
  }

  static RawDelivery make_raw(Provider provider, const std::string& kind, const std::string& id, std::string body) {
    RawDelivery d;
    d.provider = provider;
    d.body = std::move(body);
    if (provider == Provider::GitHub) {
      d.headers["X-GitHub-Event"] = kind;
      d.headers["X-GitHub-Delivery"] = id;
      d.headers["X-Hub-Signature-256"] = sign_body(kSecret, d.body);
    } else {
      d.headers["X-Gitlab-Event"] = kind;
      d.headers["X-Gitlab-Event-UUID"] = id;
      d.headers["X-Gitlab-Token"] = kSecret;
    }
    return d;
  }

  void deliver_file(const std::filesystem::path& path, const std::string& default_id) {
    auto env = json::parse(read_file(path));
    auto provider = parse_provider(env.at("provider").get<std::string>());
    auto kind = env.at("event").get<std::string>();
    auto body = env.at("body");
    expand(body);
    auto id = env.value("delivery", default_id);
    auto raw = make_raw(provider, kind, id, body.dump());
    raw.received_at = clock_.now();
    send(raw, false);
  }

  void send(const RawDelivery& raw, bool runner) {
    ++deliveries_;
    int copies = options_.duplicate_deliveries ? 2 : 1;
    for (int i = 0; i < copies; ++i) {
      auto r = runner ? ingress_->receive_runner(raw) : ingress_->receive(raw);
      if (i == 0 && (r.outcome == IngressOutcome::Unauthorized || r.outcome == IngressOutcome::Malformed))
        throw StepFailure("delivery " + r.delivery_id + " " + std::string(to_string(r.outcome)) + " " + r.detail);
    }
  }

  std::optional<RepoId> repo_for_token(const std::string& token) {
    for (const auto& a : engine_->transcript().actions())
      if (const auto* job = std::get_if<DispatchJob>(&a); job && job->token == token) return job->repo;
    return std::nullopt;
  }

  void pump() {
    for (int round = 0; round < 1000; ++round) {
      queue_->run_until_idle();
      auto outbox = forge_.take_outbox();
      auto completions = runner_.take_completions();
      if (outbox.empty() && completions.empty()) return;
      for (auto& o : outbox) {
        auto raw = make_raw(o.provider, o.kind, o.delivery_id, o.body.dump());
        raw.received_at = clock_.now();
        send(raw, false);
      }
      for (auto& c : completions) {
        auto repo = repo_for_token(c.token);
        if (!repo) continue;
        json body = {{"token", c.token}, {"repo", repo->full_name()}};
        if (c.reduced_case) body["reduced_case"] = *c.reduced_case;
        else body["failure"] = c.failure.value_or("");
        RawDelivery raw;
        raw.provider = Provider::GitHub;
        raw.body = body.dump();
        raw.headers["X-Hub-Signature-256"] = sign_body(kSecret, raw.body);
        raw.received_at = clock_.now();
        send(raw, true);
      }
    }
    throw StepFailure("event loop did not settle");
  }

  std::vector<std::string> lines() const {
    std::vector<std::string> out;
    if (!engine_) return out;
    for (const auto& rec : engine_->transcript().records())
      for (const auto& run : rec.runs)
        for (const auto& a : run.actions) out.push_back(action_line(a));
    return out;
  }

  std::string remaining(const std::vector<std::string>& ls) const {
    std::string out = "\n  actions after the previous match:";
    if (cursor_ >= ls.size()) return out + " (none)";
    for (std::size_t i = cursor_; i < ls.size(); ++i) out += "\n    " + ls[i];
    return out;
  }

  void expect_action(const std::string& pattern) {
    auto ls = lines();
    for (std::size_t i = cursor_; i < ls.size(); ++i) {
      if (pattern_matches(pattern, ls[i])) {
        cursor_ = i + 1;
        return;
      }
    }
    throw StepFailure("expected action matching '" + pattern + "'" + remaining(ls));
  }

  void expect_none(const std::string& pattern) {
    auto ls = lines();
    for (std::size_t i = cursor_; i < ls.size(); ++i)
      if (pattern_matches(pattern, ls[i]))
        throw StepFailure("unexpected action matching '" + pattern + "': " + ls[i]);
  }

  void expect_state(std::string_view line) {
    auto w = words(line);
    if (w.size() < 3) throw StepFailure("expect-state needs a predicate and a repository");
    const auto& pred = w[1];
    auto repo = mock::parse_qualified_repo(w[2]);
    auto st = forge_.state();
    auto rit = st.repos.find(repo);
    if (rit == st.repos.end()) throw StepFailure("no repository " + w[2]);
    const auto& r = rit->second;
    auto arg = [&](std::size_t i) -> const std::string& {
      if (w.size() <= i) throw StepFailure("expect-state " + pred + ": missing argument");
      return w[i];
    };
    auto pr = [&](std::size_t i) -> const mock::PullRequest& {
      auto it = r.prs.find(std::stoi(arg(i)));
      if (it == r.prs.end()) throw StepFailure("no PR #" + arg(i));
      return it->second;
    };
    auto fail = [&](const std::string& got) { throw StepFailure("state check '" + std::string(line) + "' failed: " + got); };

    if (pred == "label" || pred == "no-label") {
      const auto& p = pr(3);
      auto label = rest_after(line, 4);
      bool has = p.labels.count(label) != 0;
      if (has != (pred == "label")) fail("labels are [" + text::join({p.labels.begin(), p.labels.end()}, ", ") + "]");
    } else if (pred == "pr-state") {
      const auto& p = pr(3);
      if (text::to_lower(to_string(p.state)) != text::to_lower(arg(4))) fail(std::string(to_string(p.state)));
    } else if (pred == "milestone") {
      const auto& p = pr(3);
      auto got = p.milestone ? std::to_string(*p.milestone) : std::string("none");
      if (got != arg(4)) fail(got);
    } else if (pred == "merge-signed") {
      const auto& p = pr(3);
      if (p.state != PrState::Merged || !p.merge_signed) fail("not a signed merge");
    } else if (pred == "merge-message") {
      const auto& p = pr(3);
      if (!p.merge_commit) fail("not merged");
      auto msg = st.graph.get(*p.merge_commit).message;
      auto expected = text::replace_all(rest_after(line, 4), "\\n", "\n");
      if (msg != expected) fail(json(msg).dump());
    } else if (pred == "branch") {
      auto it = r.branches.find(arg(3));
      auto got = it == r.branches.end() ? std::string("absent") : it->second.str();
      auto want = arg(4) == "absent" ? std::string("absent") : forge_.resolve(arg(4)).str();
      if (got != want) fail(got);
    } else if (pred == "card" || pred == "no-card") {
      int board = std::stoi(arg(3));
      int n = std::stoi(arg(4));
      auto b = r.boards.find(board);
      std::optional<std::string> column;
      if (b != r.boards.end())
        if (auto c = b->second.cards.find(n); c != b->second.cards.end()) column = c->second;
      if (pred == "no-card") {
        if (column) fail("card in " + *column);
      } else if (!column || *column != rest_after(line, 5)) {
        fail(column ? "card in " + *column : std::string("no card"));
      }
    } else if (pred == "bot-comments") {
      int n = std::stoi(arg(3));
      int count = 0;
      for (const auto& c : r.comments) count += c.number == n && c.author == st.bot_login;
      if (count != std::stoi(arg(4))) fail(std::to_string(count));
    } else if (pred == "check-runs") {
      auto sha = forge_.resolve(arg(3));
      int count = 0;
      for (const auto& c : r.check_runs) count += c.sha == sha;
      if (count != std::stoi(arg(4))) fail(std::to_string(count));
    } else {
      throw StepFailure("unknown predicate '" + pred + "'");
    }
  }

  std::filesystem::path base_;
  ScenarioOptions options_;
  std::string name_;
  mock::MockForge forge_;
  mock::MockRunner runner_;
  ManualClock clock_;
  std::optional<BotConfig> config_;
  std::unique_ptr<Engine> engine_;
  std::unique_ptr<QueueDispatcher> queue_;
  std::unique_ptr<Ingress> ingress_;
  std::size_t cursor_ = 0;
  std::size_t deliveries_ = 0;
};

}  // namespace

ScenarioResult run_scenario_text(const std::string& text, const std::filesystem::path& base_dir,
                                 const ScenarioOptions& options, const std::string& name) {
  return Runner(base_dir, options, name).run(text);
}

ScenarioResult run_scenario(const std::filesystem::path& script, const ScenarioOptions& options) {
  return run_scenario_text(read_file(script), script.parent_path(), options, script.filename().string());
}

}  // namespace forgebot
