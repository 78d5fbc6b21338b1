#pragma once

// Desk-scale commit graph. Commits record which files they touch rather than
// line diffs; two histories conflict when they touch a common file since the
// point where they diverged.

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "forgebot/model.hpp"

namespace forgebot {

struct ToyCommit {
  Sha sha;
  std::vector<Sha> parents;
  std::set<std::string> files;
  std::string message;

  // sha = SHA-1 over a canonical rendering of (parents, files, message).
  static ToyCommit make(std::vector<Sha> parents, std::set<std::string> files, std::string message);
  static Sha content_hash(const std::vector<Sha>& parents, const std::set<std::string>& files,
                          const std::string& message);

  bool operator==(const ToyCommit&) const = default;
};

class CommitGraph {
 public:
  // Adds a commit whose parents are already present. Re-adding an identical
  // commit is a no-op. Throws InvalidInput on a missing parent, more than two
  // parents, or a sha that does not match the content.
  void add(const ToyCommit& commit);

  bool contains(const Sha& sha) const { return commits_.count(sha) != 0; }
  const ToyCommit& get(const Sha& sha) const;
  std::size_t size() const { return commits_.size(); }
  const std::map<Sha, ToyCommit>& commits() const { return commits_; }

  // Reflexive ancestor set.
  std::set<Sha> ancestors(const Sha& head) const;
  bool is_ancestor(const Sha& ancestor, const Sha& descendant) const;

  // Files touched by commits reachable from `head` but not from `other`.
  std::set<std::string> touched_since(const Sha& head, const Sha& other) const;

  // Files edited on both sides since the histories diverged. Empty means the
  // two heads merge cleanly.
  std::set<std::string> conflicts(const Sha& a, const Sha& b) const;

  // Two-parent merge commit [first, second] with no edits of its own, or
  // nullopt on conflict. The commit is not added to the graph.
  std::optional<ToyCommit> merge(const Sha& first, const Sha& second, const std::string& message) const;

  // Commits reachable from `to` and not from `from`, parents before children.
  std::vector<ToyCommit> between(const std::optional<Sha>& from, const Sha& to) const;

  bool operator==(const CommitGraph&) const = default;

 private:
  std::map<Sha, ToyCommit> commits_;
};

}  // namespace forgebot
