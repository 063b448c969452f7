#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "dqa/error.hpp"
#include "dqa/rag.hpp"
#include "dqa/text.hpp"
#include "mock_server.hpp"
#include "test_util.hpp"

namespace dqa {
namespace {

Document doc_of(std::string body) { return Document{"doc", "", std::move(body)}; }

std::vector<std::pair<std::size_t, std::size_t>> ranges(const std::vector<Chunk>& chunks) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (const auto& c : chunks) out.emplace_back(c.start, c.end);
  return out;
}

TEST(Segment, SixHundredCharsDefaults) {
  auto chunks = segment_text(doc_of(std::string(600, 'x')));
  EXPECT_EQ(ranges(chunks), (std::vector<std::pair<std::size_t, std::size_t>>{{0, 250}, {200, 450}, {400, 600}}));
  EXPECT_EQ(chunks[0].chunk_id, "doc#0");
  EXPECT_EQ(chunks[2].chunk_id, "doc#2");
}

TEST(Segment, ShortAndEmptyDocs) {
  EXPECT_EQ(ranges(segment_text(doc_of(std::string(100, 'y')))),
            (std::vector<std::pair<std::size_t, std::size_t>>{{0, 100}}));
  EXPECT_TRUE(segment_text(doc_of("")).empty());
}

TEST(Segment, CountsCodePoints) {
  std::string body;
  for (int i = 0; i < 300; ++i) body += "数";
  auto chunks = segment_text(doc_of(body));
  ASSERT_EQ(chunks.size(), 2u);
  EXPECT_EQ(text::utf8_length(chunks[0].text), 250u);
  EXPECT_EQ(chunks[0].text.size(), 750u);
  EXPECT_EQ(chunks[1].start, 200u);
  EXPECT_EQ(chunks[1].end, 300u);
}

TEST(Segment, BadParametersRejected) {
  EXPECT_THROW(segment_text(doc_of("abc"), 10, 10), DomainError);
  EXPECT_THROW(segment_text(doc_of("abc"), 0, 0), DomainError);
}

TEST(Embed, DeterministicAndZero) {
  TrigramEmbedder e;
  EXPECT_EQ(e.embed("abc"), e.embed("abc"));
  auto z = e.embed("");
  EXPECT_TRUE(z.zero);
  EXPECT_EQ(z.dim(), TrigramEmbedder::kDim);
  EXPECT_TRUE(std::all_of(z.values.begin(), z.values.end(), [](float v) { return v == 0.0f; }));
}

// Cosines from scripts/trigram_oracle.py (exact integer-count arithmetic).
TEST(Embed, MatchesOracleCosines) {
  TrigramEmbedder e;
  struct Case {
    const char* a;
    const char* b;
    double cosine;
  } cases[] = {
      {"create index on users", "create index on user", 0.9733285267845753},
      {"create index on users", "vacuum full analyze", 0.11128297681493142},
      {"create index on user", "vacuum full analyze", 0.1143323900950059},
      {"数据库索引优化", "数据库索引", 0.7745966692414834},
      {"ab", "ab", 1.0},
  };
  for (const auto& c : cases) EXPECT_NEAR(cosine(e.embed(c.a), e.embed(c.b)), c.cosine, 1e-6) << c.a << " / " << c.b;
  EXPECT_GT(cosine(e.embed("create index on users"), e.embed("create index on user")),
            cosine(e.embed("create index on users"), e.embed("vacuum full analyze")));
}

TEST(Index, BuildAndDuplicates) {
  TrigramEmbedder e;
  auto chunks = segment_text(doc_of(std::string(600, 'x')));
  auto index = build_index(chunks, e);
  EXPECT_EQ(index.size(), 3u);
  EXPECT_THROW(index.add("doc#0", e.embed("x")), IntegrityError);
  EXPECT_THROW(index.add("other", EmbeddingVector::normalized({1.0f, 2.0f})), DomainError);
  VectorIndex empty = build_index(std::span<const Chunk>{}, e);
  EXPECT_TRUE(retrieve(empty, "anything", e).empty());
}

TEST(Retrieve, ExactTextRanksFirst) {
  TrigramEmbedder e;
  std::vector<Chunk> chunks{{"m#0", "m", "create index concurrently on orders", 0, 0},
                            {"m#1", "m", "vacuum full reclaims disk space", 0, 0},
                            {"m#2", "m", "checkpoint tuning for write heavy loads", 0, 0}};
  auto index = build_index(chunks, e);
  auto hits = retrieve(index, "vacuum full reclaims disk space", e);
  ASSERT_FALSE(hits.empty());
  EXPECT_EQ(hits[0].chunk_id, "m#1");
  EXPECT_NEAR(hits[0].similarity, 1.0, 1e-6);
}

TEST(Retrieve, ThresholdFiltersEverything) {
  TrigramEmbedder e;
  std::vector<Chunk> chunks{{"m#0", "m", "aaaaaaaaaa", 0, 0}};
  auto index = build_index(chunks, e);
  EXPECT_TRUE(retrieve(index, "zzzzzzzzzz", e).empty());
}

TEST(Retrieve, ZeroQueryMatchesNothing) {
  TrigramEmbedder e;
  std::vector<Chunk> chunks{{"m#0", "m", "abc", 0, 0}};
  auto index = build_index(chunks, e);
  EXPECT_TRUE(retrieve(index, "", e, 3, -1.0).empty());
}

TEST(Retrieve, MatchesBruteForceOnTenChunks) {
  std::mt19937_64 rng(11);
  std::normal_distribution<float> n;
  VectorIndex index(8);
  std::vector<std::pair<std::string, EmbeddingVector>> all;
  for (int i = 0; i < 10; ++i) {
    std::vector<float> v(8);
    for (auto& x : v) x = n(rng);
    auto ev = EmbeddingVector::normalized(v);
    all.emplace_back("c" + std::to_string(i), ev);
    index.add("c" + std::to_string(i), ev);
  }
  std::vector<float> q(8);
  for (auto& x : q) x = n(rng);
  auto query = EmbeddingVector::normalized(q);
  auto hits = index.search(query, 3, -1.0);
  std::sort(all.begin(), all.end(), [&](const auto& a, const auto& b) {
    return std::pair(squared_l2(a.second.values, query.values), a.first) <
           std::pair(squared_l2(b.second.values, query.values), b.first);
  });
  ASSERT_EQ(hits.size(), 3u);
  for (int i = 0; i < 3; ++i) EXPECT_EQ(hits[i].chunk_id, all[i].first);
}

TEST(Retrieve, TiesBreakByChunkId) {
  VectorIndex index(2);
  auto v = EmbeddingVector::normalized({1.0f, 0.0f});
  index.add("b", v);
  index.add("a", v);
  index.add("c", v);
  auto hits = index.search(v, 2, 0.5);
  ASSERT_EQ(hits.size(), 2u);
  EXPECT_EQ(hits[0].chunk_id, "a");
  EXPECT_EQ(hits[1].chunk_id, "b");
}

TEST(PAt3, Formula) {
  std::vector<RetrievalResult> results{{{"a", 1}, {"b", 1}, {"c", 1}}};
  std::vector<std::set<std::string>> labels{{"a", "c"}};
  EXPECT_NEAR(p_at_3(results, labels), 2.0 / 3.0, 1e-12);
  labels = {{"a", "b", "c"}};
  EXPECT_EQ(p_at_3(results, labels), 1.0);
  std::vector<RetrievalResult> short_result{{{"a", 1}}};
  EXPECT_NEAR(p_at_3(short_result, labels), 1.0 / 3.0, 1e-12);
  EXPECT_THROW(p_at_3({}, {}), DomainError);
  EXPECT_THROW(p_at_3(results, std::vector<std::set<std::string>>{}), DomainError);
}

TEST(Persistence, IndexRoundTrip) {
  TrigramEmbedder e;
  auto chunks = segment_text(doc_of("Vacuum reclaims storage. Analyze collects statistics. 数据库"), 20, 5);
  auto index = build_index(chunks, e);
  index.add("zero", e.embed(""));
  testing::TempDir dir;
  index.save(dir.file("i.idx"));
  auto back = VectorIndex::load(dir.file("i.idx"));
  ASSERT_EQ(back.size(), index.size());
  EXPECT_EQ(back.dim(), index.dim());
  for (std::size_t i = 0; i < index.size(); ++i) {
    EXPECT_EQ(back.entries()[i].chunk_id, index.entries()[i].chunk_id);
    EXPECT_EQ(back.entries()[i].vector, index.entries()[i].vector);
  }
  EXPECT_EQ(text::read_file(dir.file("i.idx")).substr(0, 8), "DQAIDX01");
  text::write_file(dir.file("bad.idx"), "NOTANIDX");
  EXPECT_THROW(VectorIndex::load(dir.file("bad.idx")), ParseError);
}

TEST(Persistence, ChunkStoreRoundTrip) {
  auto chunks = segment_text(doc_of(std::string(600, 'q')));
  ChunkStore store;
  store.add_all(chunks);
  testing::TempDir dir;
  store.save(dir.file("c.jsonl"));
  auto back = ChunkStore::load(dir.file("c.jsonl"));
  ASSERT_EQ(back.size(), 3u);
  EXPECT_EQ(*back.find("doc#1"), chunks[1]);
  EXPECT_EQ(back.find("nope"), nullptr);
}

TEST(RemoteEmbedderTest, UsesService) {
  testing::MockServer server({{200, R"({"vector":[3.0, 4.0]})"}});
  RemoteEmbedder e(server.url("/embed"));
  auto v = e.embed("hello");
  ASSERT_EQ(v.dim(), 2u);
  EXPECT_NEAR(v.values[0], 0.6, 1e-6);
  EXPECT_NEAR(v.values[1], 0.8, 1e-6);
  testing::MockServer bad({{200, R"({"vector":"x"})"}});
  EXPECT_THROW(RemoteEmbedder(bad.url("/embed")).embed("x"), ServiceError);
}

}  // namespace
}  // namespace dqa
