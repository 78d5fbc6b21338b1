#include <gtest/gtest.h>

#include <random>

#include "forgebot/commit_graph.hpp"
#include "forgebot/crypto.hpp"
#include "forgebot/errors.hpp"
#include "forgebot/gateway.hpp"
#include "forgebot/model.hpp"
#include "forgebot/text.hpp"
#include "criteria.hpp"
#include "oracle.hpp"

using namespace forgebot;

namespace {

std::string random_bytes(std::mt19937_64& rng, std::size_t n) {
  std::string s(n, '\0');
  for (auto& c : s) c = static_cast<char>(rng() & 0xff);
  return s;
}

}  // namespace

TEST(Crypto, Sha256MatchesOracleOnRandomInputs) {
  std::mt19937_64 rng(7);
  // Lengths around the 55/56/64 byte padding boundaries are the interesting ones.
  for (std::size_t n : {0u, 1u, 55u, 56u, 57u, 63u, 64u, 65u, 119u, 120u, 128u, 1000u}) {
    auto s = random_bytes(rng, n);
    EXPECT_EQ(crypto::sha256_hex(s), oracle::sha256_hex(s)) << "length " << n;
  }
  for (int i = 0; i < 200; ++i) {
    auto s = random_bytes(rng, rng() % 300);
    ASSERT_EQ(crypto::sha256_hex(s), oracle::sha256_hex(s));
  }
}

TEST(Crypto, HmacMatchesOracleOnRandomKeys) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 200; ++i) {
    auto key = random_bytes(rng, 1 + rng() % 150);
    auto msg = random_bytes(rng, rng() % 400);
    ASSERT_EQ(crypto::hmac_sha256_hex(key, msg), oracle::hmac_sha256_hex(key, msg));
  }
}

TEST(Crypto, Sha1KnownValue) {
  EXPECT_EQ(crypto::sha1_hex("abc"), "a9993e364706816aba3e25717850c26c9cd0d89d");
}

TEST(Crypto, ConstantTimeEquals) {
  EXPECT_TRUE(crypto::constant_time_equals("abc", "abc"));
  EXPECT_FALSE(crypto::constant_time_equals("abc", "abd"));
  EXPECT_FALSE(crypto::constant_time_equals("abc", "abcd"));
  EXPECT_TRUE(crypto::constant_time_equals("", ""));
}

TEST(Text, FillAndLines) {
  EXPECT_EQ(text::fill("a {x} {y} {z}", {{"x", "1"}, {"y", "2"}}), "a 1 2 {z}");
  auto lines = text::split_lines("a\r\nb\n\nc\n");
  ASSERT_EQ(lines.size(), 4u);
  EXPECT_EQ(lines[0], "a");
  EXPECT_EQ(lines[2], "");
  EXPECT_EQ(text::trim("  x \t"), "x");
  EXPECT_TRUE(text::iequals("Merge", "mERGE"));
}

TEST(Text, TruncateKeepsUtf8Whole) {
  std::string s = "ab\xc3\xa9";  // "abé"
  EXPECT_EQ(text::truncate_utf8(s, 3), "ab");
  EXPECT_EQ(text::truncate_utf8(s, 4), s);
  EXPECT_EQ(text::truncate_utf8(s, 0), "");
}

TEST(Model, DurationsRoundTrip) {
  for (auto d : {days(30), Duration(90), Duration(3600), Duration(300), days(1)})
    EXPECT_EQ(parse_duration(format_duration(d)), d);
  EXPECT_EQ(parse_duration("12h"), std::chrono::hours(12));
  EXPECT_THROW(parse_duration("12x"), InvalidInput);
  EXPECT_THROW(parse_duration(""), InvalidInput);
}

TEST(Model, Iso8601) {
  auto t = parse_iso8601("2021-01-04T10:20:30Z");
  EXPECT_EQ(format_iso8601(t), "2021-01-04T10:20:30Z");
  EXPECT_THROW(parse_iso8601("yesterday"), InvalidInput);
}

TEST(Model, ShaAndRepoValidation) {
  EXPECT_THROW(Sha("abc123"), InvalidInput);
  EXPECT_NO_THROW(Sha(std::string(40, 'a')));
  EXPECT_THROW(RepoId(Provider::GitHub, "", "x"), InvalidInput);
  auto r = RepoId::parse(Provider::GitLab, "group/sub/proj");
  EXPECT_EQ(r.owner(), "group/sub");
  EXPECT_EQ(r.name(), "proj");
}

TEST(Model, LabelClassification) {
  EXPECT_EQ(classify_label("needs: rebase").category, LabelCategory::Needs);
  EXPECT_EQ(classify_label("kind: fix").category, LabelCategory::Kind);
  EXPECT_EQ(classify_label("part: ltac").category, LabelCategory::Other);
  LabelPrefixes custom{"blocked/", "type/"};
  EXPECT_EQ(classify_label("type/bug", custom).category, LabelCategory::Kind);
  EXPECT_THROW(classify_label(""), InvalidInput);
}

// ---------------------------------------------------------------------------

TEST(CommitGraph, RejectsBadCommits) {
  CommitGraph g;
  auto root = ToyCommit::make({}, {"a"}, "root");
  g.add(root);
  EXPECT_NO_THROW(g.add(root));
  auto orphan = ToyCommit::make({ToyCommit::make({}, {}, "elsewhere").sha}, {}, "orphan");
  EXPECT_THROW(g.add(orphan), InvalidInput);
  auto forged = ToyCommit::make({root.sha}, {"b"}, "x");
  forged.message = "y";
  EXPECT_THROW(g.add(forged), InvalidInput);
}

TEST(CommitGraph, AgreesWithOracleOnRandomDags) {
  std::mt19937_64 rng(3);
  for (int round = 0; round < 100; ++round) {
    int n = 2 + static_cast<int>(rng() % 10);
    oracle::Dag dag;
    CommitGraph g;
    std::vector<Sha> shas;
    for (int j = 0; j < n; ++j) {
      std::vector<int> ps;
      if (j > 0) {
        ps.push_back(static_cast<int>(rng() % j));
        if (j > 1 && rng() % 3 == 0) {
          int q = static_cast<int>(rng() % j);
          if (q != ps[0]) ps.push_back(q);
        }
      }
      std::set<std::string> files;
      for (auto f : {"a", "b", "c", "d"})
        if (rng() % 4 == 0) files.insert(f);
      std::vector<Sha> pshas;
      for (int p : ps) pshas.push_back(shas[p]);
      auto c = ToyCommit::make(pshas, files, std::to_string(round) + "/" + std::to_string(j));
      g.add(c);
      shas.push_back(c.sha);
      dag.parents.push_back(ps);
      dag.files.push_back(files);
    }
    auto reach = dag.closure();
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) {
        ASSERT_EQ(g.is_ancestor(shas[b], shas[a]), static_cast<bool>(reach[a][b]));
        ASSERT_EQ(g.conflicts(shas[a], shas[b]), dag.conflicts(a, b));
      }
  }
}

TEST(CommitGraph, MergeParentsAndBetween) {
  CommitGraph g;
  auto root = ToyCommit::make({}, {"r"}, "root");
  auto a = ToyCommit::make({root.sha}, {"a"}, "a");
  auto b = ToyCommit::make({root.sha}, {"b"}, "b");
  auto c = ToyCommit::make({root.sha}, {"a"}, "c");
  for (const auto& x : {root, a, b, c}) g.add(x);
  auto m = g.merge(a.sha, b.sha, "m");
  ASSERT_TRUE(m);
  EXPECT_EQ(m->parents, (std::vector<Sha>{a.sha, b.sha}));
  EXPECT_TRUE(m->files.empty());
  EXPECT_FALSE(g.merge(a.sha, c.sha, "m2"));
  EXPECT_EQ(g.conflicts(a.sha, c.sha), std::set<std::string>{"a"});
  auto seq = g.between(root.sha, a.sha);
  ASSERT_EQ(seq.size(), 1u);
  EXPECT_EQ(seq[0].sha, a.sha);
  EXPECT_EQ(g.between(std::nullopt, a.sha).front().sha, root.sha);
}

// ---------------------------------------------------------------------------

TEST(Gateway, SignatureVectors) {
  auto vectors = oracle::load_hmac_vectors((criteria::source_dir() / "tests/oracle/hmac_vectors.json").string());
  ASSERT_GE(vectors.size(), 10u);
  for (const auto& v : vectors) {
    auto header = "sha256=" + v.digest_hex;
    EXPECT_EQ(sign_body(v.key, v.message), header) << v.name;
    if (v.key.empty()) {
      EXPECT_FALSE(verify_signature(v.key, v.message, header)) << v.name;
      continue;
    }
    EXPECT_TRUE(verify_signature(v.key, v.message, header)) << v.name;
    EXPECT_FALSE(verify_signature(v.key, v.message + "x", header)) << v.name;
  }
}

TEST(Gateway, MalformedSignatureHeaders) {
  auto good = sign_body("s", "body");
  EXPECT_TRUE(verify_signature("s", "body", good));
  EXPECT_FALSE(verify_signature("s", "body", ""));
  EXPECT_FALSE(verify_signature("s", "body", good.substr(7)));
  EXPECT_FALSE(verify_signature("s", "body", "sha1=" + good.substr(7)));
  EXPECT_FALSE(verify_signature("s", "body", good.substr(0, good.size() - 1)));
  EXPECT_FALSE(verify_signature("t", "body", good));
}

TEST(Gateway, GitlabToken) {
  EXPECT_TRUE(verify_gitlab_token("tok", "tok"));
  EXPECT_FALSE(verify_gitlab_token("tok", "tok "));
  EXPECT_FALSE(verify_gitlab_token("tok", ""));
  EXPECT_FALSE(verify_gitlab_token("", ""));
}

TEST(Gateway, LedgerEvictsOldestFirst) {
  DeliveryLedger ledger(3);
  EXPECT_TRUE(ledger.admit("a"));
  EXPECT_FALSE(ledger.admit("a"));
  EXPECT_TRUE(ledger.admit("b"));
  EXPECT_TRUE(ledger.admit("c"));
  EXPECT_TRUE(ledger.admit("d"));  // evicts a
  EXPECT_EQ(ledger.size(), 3u);
  EXPECT_FALSE(ledger.admit("d"));
  EXPECT_TRUE(ledger.admit("a"));
}

TEST(Gateway, HeaderLookupIgnoresCase) {
  RawDelivery d;
  d.headers["X-GitHub-Delivery"] = "abc";
  EXPECT_EQ(d.header("x-github-delivery"), "abc");
  EXPECT_EQ(delivery_id_of(d), "abc");
  RawDelivery anon;
  anon.body = "{}";
  EXPECT_FALSE(delivery_id_of(anon).empty());
}
