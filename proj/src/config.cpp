#include "forgebot/config.hpp"

#include <cstdlib>
#include <fstream>
#include <regex>
#include <sstream>

#include "forgebot/errors.hpp"

namespace forgebot {

using nlohmann::json;

bool RepoConfig::operator==(const RepoConfig& o) const {
  return repo == o.repo && mirror == o.mirror && base_branches == o.base_branches &&
         merge_policy == o.merge_policy && templates == o.templates && stale == o.stale &&
         docs_jobs == o.docs_jobs && reverse_dependency_jobs == o.reverse_dependency_jobs &&
         backport == o.backport && label_prefixes.needs == o.label_prefixes.needs &&
         label_prefixes.kind == o.label_prefixes.kind && error_patterns == o.error_patterns;
}

const RepoConfig* BotConfig::find(const RepoId& repo) const {
  for (const auto& r : repositories)
    if (r.repo == repo) return &r;
  return nullptr;
}

GatewayConfig BotConfig::gateway() const {
  GatewayConfig g;
  for (const auto& r : repositories) {
    GatewayRepo gr;
    gr.source = r.repo;
    if (r.mirror) gr.mirror = r.mirror->mirror;
    gr.base_branches = r.base_branches;
    g.repos.push_back(std::move(gr));
  }
  return g;
}

namespace {

// Walks a JSON object, collecting errors instead of throwing.
class Reader {
 public:
  Reader(const json& obj, std::string path, std::vector<std::string>& errors)
      : obj_(obj), path_(std::move(path)), errors_(errors) {
    if (!obj_.is_object()) error("", "must be an object");
  }

  ~Reader() = default;

  // Reports keys that no getter asked about.
  void finish() {
    if (!obj_.is_object()) return;
    for (const auto& [k, v] : obj_.items())
      if (!used_.count(k)) error(k, "unknown field");
  }

  void error(const std::string& key, const std::string& msg) {
    errors_.push_back((key.empty() ? path_ : at(key)) + ": " + msg);
  }

  std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const json* get(const std::string& key) {
    used_.insert(key);
    if (!obj_.is_object() || !obj_.contains(key)) return nullptr;
    return &obj_.at(key);
  }

  void string(const std::string& key, std::string& out, bool non_empty = true) {
    const auto* v = get(key);
    if (!v) return;
    if (!v->is_string()) return error(key, "must be a string");
    if (non_empty && v->get<std::string>().empty()) return error(key, "must not be empty");
    out = v->get<std::string>();
  }

  void boolean(const std::string& key, bool& out) {
    const auto* v = get(key);
    if (!v) return;
    if (!v->is_boolean()) return error(key, "must be true or false");
    out = v->get<bool>();
  }

  void integer(const std::string& key, int& out, int min) {
    const auto* v = get(key);
    if (!v) return;
    if (!v->is_number_integer()) return error(key, "must be an integer");
    auto n = v->get<long long>();
    if (n < min || n > 1000000000) return error(key, "must be at least " + std::to_string(min));
    out = static_cast<int>(n);
  }

  void duration(const std::string& key, Duration& out) {
    const auto* v = get(key);
    if (!v) return;
    if (!v->is_string()) return error(key, "must be a duration such as \"30d\"");
    try {
      out = parse_duration(v->get<std::string>());
    } catch (const InvalidInput& e) {
      error(key, e.what());
    }
  }

  void strings(const std::string& key, std::vector<std::string>& out) {
    const auto* v = get(key);
    if (!v) return;
    if (!v->is_array()) return error(key, "must be a list of strings");
    std::vector<std::string> tmp;
    for (std::size_t i = 0; i < v->size(); ++i) {
      const auto& e = (*v)[i];
      if (!e.is_string() || e.get<std::string>().empty()) {
        error(key, "entry " + std::to_string(i) + " must be a non-empty string");
        return;
      }
      tmp.push_back(e.get<std::string>());
    }
    out = std::move(tmp);
  }

  void string_set(const std::string& key, std::set<std::string>& out) {
    std::vector<std::string> v;
    bool present = obj_.is_object() && obj_.contains(key);
    strings(key, v);
    if (present) out = std::set<std::string>(v.begin(), v.end());
  }

  void repo(const std::string& key, Provider provider, RepoId& out, bool required) {
    const auto* v = get(key);
    if (!v) {
      if (required) error(key, "is required");
      return;
    }
    if (!v->is_string()) return error(key, "must be \"owner/name\"");
    try {
      out = RepoId::parse(provider, v->get<std::string>());
    } catch (const InvalidInput& e) {
      error(key, e.what());
    }
  }

  const std::string& path() const { return path_; }

 private:
  const json& obj_;
  std::string path_;
  std::vector<std::string>& errors_;
  std::set<std::string> used_;
};

bool valid_env_name(const std::string& s) {
  static const std::regex re("[A-Z_][A-Z0-9_]*");
  return std::regex_match(s, re);
}

LabelCategory parse_category(const std::string& s) {
  if (s == "needs") return LabelCategory::Needs;
  if (s == "kind") return LabelCategory::Kind;
  if (s == "other") return LabelCategory::Other;
  throw InvalidInput("unknown label category '" + s + "'");
}

std::string category_name(LabelCategory c) {
  switch (c) {
    case LabelCategory::Needs: return "needs";
    case LabelCategory::Kind: return "kind";
    case LabelCategory::Other: return "other";
  }
  return "other";
}

void read_policy(const json& doc, const std::string& path, MergePolicy& p, std::vector<std::string>& errors) {
  Reader r(doc, path, errors);
  r.boolean("require_kind_label", p.require_kind_label);
  std::vector<std::string> cats;
  bool has_cats = doc.is_object() && doc.contains("forbidden_categories");
  r.strings("forbidden_categories", cats);
  if (has_cats) {
    p.forbidden_categories.clear();
    for (const auto& c : cats) {
      try {
        p.forbidden_categories.insert(parse_category(c));
      } catch (const InvalidInput& e) {
        r.error("forbidden_categories", e.what());
      }
    }
  }
  r.boolean("require_milestone", p.require_milestone);
  r.boolean("require_assignee", p.require_assignee);
  r.integer("min_approvals", p.min_approvals, 0);
  r.boolean("forbid_changes_requested", p.forbid_changes_requested);
  r.string_set("allowed_base_branches", p.allowed_base_branches);
  r.boolean("require_ci_success", p.require_ci_success);
  r.boolean("forbid_conflicts", p.forbid_conflicts);
  r.boolean("forbid_self_merge", p.forbid_self_merge);
  r.string("authorized_team", p.authorized_team);
  r.finish();
}

void read_repo(const json& doc, const std::string& path, RepoConfig& rc, std::vector<std::string>& errors) {
  Reader r(doc, path, errors);
  r.repo("repo", Provider::GitHub, rc.repo, true);

  if (const auto* m = r.get("mirror")) {
    MirrorMapping mm;
    mm.source = rc.repo;
    if (m->is_string()) {
      try {
        mm.mirror = RepoId::parse(Provider::GitLab, m->get<std::string>());
        rc.mirror = mm;
      } catch (const InvalidInput& e) {
        r.error("mirror", e.what());
      }
    } else {
      Reader mr(*m, r.at("mirror"), errors);
      mr.repo("repo", Provider::GitLab, mm.mirror, true);
      mr.string("branch_prefix", mm.branch_prefix);
      mr.finish();
      if (!mm.mirror.name().empty()) rc.mirror = mm;
    }
  }

  r.string_set("base_branches", rc.base_branches);
  if (rc.base_branches.empty()) r.error("base_branches", "must name at least one branch");

  if (const auto* p = r.get("merge_policy")) read_policy(*p, r.at("merge_policy"), rc.merge_policy, errors);

  if (const auto* t = r.get("templates")) {
    Reader tr(*t, r.at("templates"), errors);
    tr.string("merge_message", rc.templates.merge_message);
    tr.string("stale_warning", rc.templates.stale_warning);
    tr.string("stale_closure", rc.templates.stale_closure);
    tr.string("backport_rejection", rc.templates.backport_rejection);
    tr.finish();
  }

  if (const auto* s = r.get("stale")) {
    Reader sr(*s, r.at("stale"), errors);
    sr.duration("warn_after", rc.stale.warn_after);
    sr.duration("grace", rc.stale.grace);
    sr.duration("scan_period", rc.stale.scan_period);
    if (rc.stale.scan_period < std::chrono::minutes(1)) sr.error("scan_period", "must be at least one minute");
    sr.finish();
  }

  r.string_set("docs_jobs", rc.docs_jobs);
  r.string_set("reverse_dependency_jobs", rc.reverse_dependency_jobs);

  if (const auto* b = r.get("backport")) {
    Reader br(*b, r.at("backport"), errors);
    br.integer("board", rc.backport.board, 1);
    br.string("request_column", rc.backport.request_column);
    br.string("shipped_column", rc.backport.shipped_column);
    if (rc.backport.request_column == rc.backport.shipped_column)
      br.error("shipped_column", "must differ from request_column");
    br.finish();
  }

  if (const auto* l = r.get("label_prefixes")) {
    Reader lr(*l, r.at("label_prefixes"), errors);
    lr.string("needs", rc.label_prefixes.needs);
    lr.string("kind", rc.label_prefixes.kind);
    lr.finish();
  }

  r.strings("error_patterns", rc.error_patterns);
  for (const auto& p : rc.error_patterns) {
    try {
      std::regex re(p);
    } catch (const std::regex_error&) {
      r.error("error_patterns", "invalid regular expression '" + p + "'");
    }
  }
  r.finish();
}

}  // namespace

BotConfig parse_config(const json& doc) {
  std::vector<std::string> errors;
  BotConfig cfg;
  Reader r(doc, "", errors);
  if (!doc.is_object()) throw ConfigErrors(errors);

  r.string("bot_handle", cfg.bot_handle);
  r.string("listen", cfg.listen);
  r.string("github_api", cfg.github_api);
  r.string("gitlab_api", cfg.gitlab_api);
  if (const auto* u = r.get("runner_url")) {
    if (u->is_string() && !u->get<std::string>().empty()) cfg.runner_url = u->get<std::string>();
    else if (!u->is_null()) r.error("runner_url", "must be a non-empty string");
  }

  if (const auto* s = r.get("secrets")) {
    Reader sr(*s, "secrets", errors);
    auto env = [&](const std::string& key, std::string& out) {
      sr.string(key, out);
      if (!valid_env_name(out)) sr.error(key, "must name an environment variable, not hold a secret");
    };
    env("webhook_secret_env", cfg.secrets.webhook_secret);
    env("github_token_env", cfg.secrets.github_token);
    env("gitlab_token_env", cfg.secrets.gitlab_token);
    for (const auto& [k, v] : s->items()) {
      if (k.size() > 4 && k.substr(k.size() - 4) == "_env") continue;
      sr.get(k);
      sr.error(k, "secret values must come from the environment; use " + k + "_env");
    }
    sr.finish();
  }

  const auto* repos = r.get("repositories");
  if (!repos) {
    r.error("repositories", "is required");
  } else if (!repos->is_array() || repos->empty()) {
    r.error("repositories", "must be a non-empty list");
  } else {
    for (std::size_t i = 0; i < repos->size(); ++i) {
      RepoConfig rc;
      read_repo((*repos)[i], "repositories[" + std::to_string(i) + "]", rc, errors);
      for (const auto& other : cfg.repositories)
        if (other.repo == rc.repo && !rc.repo.name().empty())
          errors.push_back("repositories[" + std::to_string(i) + "].repo: duplicate of " + rc.repo.full_name());
      cfg.repositories.push_back(std::move(rc));
    }
  }
  r.finish();
  if (!errors.empty()) throw ConfigErrors(std::move(errors));
  return cfg;
}

BotConfig parse_config_text(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigErrors({std::string("not valid JSON: ") + e.what()});
  }
  return parse_config(doc);
}

BotConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigErrors({path.string() + ": cannot read configuration file"});
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config_text(ss.str());
  } catch (const ConfigErrors& e) {
    std::vector<std::string> errs;
    for (const auto& m : e.errors) errs.push_back(path.string() + ": " + m);
    throw ConfigErrors(std::move(errs));
  }
}

json config_to_json(const BotConfig& c) {
  json repos = json::array();
  for (const auto& r : c.repositories) {
    json j;
    j["repo"] = r.repo.full_name();
    if (r.mirror) j["mirror"] = {{"repo", r.mirror->mirror.full_name()}, {"branch_prefix", r.mirror->branch_prefix}};
    j["base_branches"] = r.base_branches;
    const auto& p = r.merge_policy;
    json cats = json::array();
    for (auto cat : p.forbidden_categories) cats.push_back(category_name(cat));
    j["merge_policy"] = {{"require_kind_label", p.require_kind_label},
                         {"forbidden_categories", cats},
                         {"require_milestone", p.require_milestone},
                         {"require_assignee", p.require_assignee},
                         {"min_approvals", p.min_approvals},
                         {"forbid_changes_requested", p.forbid_changes_requested},
                         {"allowed_base_branches", p.allowed_base_branches},
                         {"require_ci_success", p.require_ci_success},
                         {"forbid_conflicts", p.forbid_conflicts},
                         {"forbid_self_merge", p.forbid_self_merge},
                         {"authorized_team", p.authorized_team}};
    j["templates"] = {{"merge_message", r.templates.merge_message},
                      {"stale_warning", r.templates.stale_warning},
                      {"stale_closure", r.templates.stale_closure},
                      {"backport_rejection", r.templates.backport_rejection}};
    j["stale"] = {{"warn_after", format_duration(r.stale.warn_after)},
                  {"grace", format_duration(r.stale.grace)},
                  {"scan_period", format_duration(r.stale.scan_period)}};
    j["docs_jobs"] = r.docs_jobs;
    j["reverse_dependency_jobs"] = r.reverse_dependency_jobs;
    j["backport"] = {{"board", r.backport.board},
                     {"request_column", r.backport.request_column},
                     {"shipped_column", r.backport.shipped_column}};
    j["label_prefixes"] = {{"needs", r.label_prefixes.needs}, {"kind", r.label_prefixes.kind}};
    j["error_patterns"] = r.error_patterns;
    repos.push_back(std::move(j));
  }
  json out = {{"bot_handle", c.bot_handle},
              {"listen", c.listen},
              {"github_api", c.github_api},
              {"gitlab_api", c.gitlab_api},
              {"secrets",
               {{"webhook_secret_env", c.secrets.webhook_secret},
                {"github_token_env", c.secrets.github_token},
                {"gitlab_token_env", c.secrets.gitlab_token}}},
              {"repositories", repos}};
  if (c.runner_url) out["runner_url"] = *c.runner_url;
  return out;
}

std::string webhook_secret(const BotConfig& config) {
  const char* v = std::getenv(config.secrets.webhook_secret.c_str());
  return v ? std::string(v) : std::string();
}

}  // namespace forgebot
