#include "forgebot/commit_graph.hpp"

#include <algorithm>

#include "forgebot/crypto.hpp"
#include "forgebot/errors.hpp"

namespace forgebot {

Sha ToyCommit::content_hash(const std::vector<Sha>& parents, const std::set<std::string>& files,
                            const std::string& message) {
  std::string canon;
  for (const auto& p : parents) canon += "parent " + p.str() + "\n";
  for (const auto& f : files) canon += "file " + f + "\n";
  canon += "\n" + message;
  return Sha(crypto::sha1_hex(canon));
}

ToyCommit ToyCommit::make(std::vector<Sha> parents, std::set<std::string> files, std::string message) {
  ToyCommit c;
  c.sha = content_hash(parents, files, message);
  c.parents = std::move(parents);
  c.files = std::move(files);
  c.message = std::move(message);
  return c;
}

void CommitGraph::add(const ToyCommit& commit) {
  if (commit.parents.size() > 2) throw InvalidInput("commit has more than two parents");
  if (ToyCommit::content_hash(commit.parents, commit.files, commit.message) != commit.sha)
    throw InvalidInput("commit sha does not match its content: " + commit.sha.str());
  for (const auto& p : commit.parents)
    if (!contains(p)) throw InvalidInput("unknown parent " + p.str());
  commits_.emplace(commit.sha, commit);
}

const ToyCommit& CommitGraph::get(const Sha& sha) const {
  auto it = commits_.find(sha);
  if (it == commits_.end()) throw NotFound("unknown commit " + sha.str());
  return it->second;
}

std::set<Sha> CommitGraph::ancestors(const Sha& head) const {
  std::set<Sha> seen;
  std::vector<Sha> stack{head};
  while (!stack.empty()) {
    Sha s = stack.back();
    stack.pop_back();
    if (!seen.insert(s).second) continue;
    for (const auto& p : get(s).parents) stack.push_back(p);
  }
  return seen;
}

bool CommitGraph::is_ancestor(const Sha& ancestor, const Sha& descendant) const {
  return ancestors(descendant).count(ancestor) != 0;
}

std::set<std::string> CommitGraph::touched_since(const Sha& head, const Sha& other) const {
  auto mine = ancestors(head);
  auto theirs = ancestors(other);
  std::set<std::string> files;
  for (const auto& s : mine)
    if (!theirs.count(s)) files.insert(get(s).files.begin(), get(s).files.end());
  return files;
}

std::set<std::string> CommitGraph::conflicts(const Sha& a, const Sha& b) const {
  auto left = touched_since(a, b);
  auto right = touched_since(b, a);
  std::set<std::string> both;
  std::set_intersection(left.begin(), left.end(), right.begin(), right.end(),
                        std::inserter(both, both.begin()));
  return both;
}

std::optional<ToyCommit> CommitGraph::merge(const Sha& first, const Sha& second,
                                            const std::string& message) const {
  if (!conflicts(first, second).empty()) return std::nullopt;
  return ToyCommit::make({first, second}, {}, message);
}

std::vector<ToyCommit> CommitGraph::between(const std::optional<Sha>& from, const Sha& to) const {
  std::set<Sha> excluded;
  if (from && contains(*from)) excluded = ancestors(*from);
  std::vector<ToyCommit> out;
  std::set<Sha> emitted;
  // Iterative post-order DFS: parents are emitted before children.
  std::vector<std::pair<Sha, bool>> stack{{to, false}};
  while (!stack.empty()) {
    auto [sha, expanded] = stack.back();
    stack.pop_back();
    if (excluded.count(sha) || emitted.count(sha)) continue;
    const auto& c = get(sha);
    if (expanded) {
      emitted.insert(sha);
      out.push_back(c);
      continue;
    }
    stack.emplace_back(sha, true);
    for (auto it = c.parents.rbegin(); it != c.parents.rend(); ++it) stack.emplace_back(*it, false);
  }
  return out;
}

}  // namespace forgebot
