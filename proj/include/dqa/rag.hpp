#pragma once

#include <chrono>
#include <cstddef>
#include <map>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dqa/corpus.hpp"

namespace dqa {

inline constexpr std::size_t kDefaultSegmentLength = 250;
inline constexpr std::size_t kDefaultSegmentOverlap = 50;
inline constexpr std::size_t kDefaultTopK = 3;
inline constexpr double kDefaultSimilarityThreshold = 0.5;

/// A window of a source document. Offsets count Unicode code points.
struct Chunk {
  std::string chunk_id;
  std::string doc_id;
  std::string text;
  std::size_t start = 0;
  std::size_t end = 0;

  bool operator==(const Chunk&) const = default;
};

/// Fixed-length windows advancing by seg_len - overlap code points. The last
/// window may be shorter. Throws DomainError unless overlap < seg_len.
std::vector<Chunk> segment_text(const Document& doc, std::size_t seg_len = kDefaultSegmentLength,
                                std::size_t overlap = kDefaultSegmentOverlap);

struct EmbeddingVector {
  std::vector<float> values;
  /// True when the input norm was zero; values are then all zero.
  bool zero = false;

  std::size_t dim() const { return values.size(); }

  /// L2-normalizes `raw`; a zero vector stays zero and is flagged.
  static EmbeddingVector normalized(std::vector<float> raw);

  bool operator==(const EmbeddingVector&) const = default;
};

class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual EmbeddingVector embed(std::string_view text) const = 0;
  virtual std::string name() const = 0;
};

/// Offline embedder: counts of code-point trigrams hashed with FNV-1a into
/// 256 buckets, then L2-normalized. Texts shorter than three code points
/// hash as a single gram.
class TrigramEmbedder final : public Embedder {
 public:
  static constexpr std::size_t kDim = 256;

  EmbeddingVector embed(std::string_view text) const override;
  std::string name() const override { return "trigram-fnv1a-256"; }
};

/// Embedding service: POST {"text": ...} -> {"vector": [...]}.
class RemoteEmbedder final : public Embedder {
 public:
  explicit RemoteEmbedder(std::string endpoint_url,
                          std::chrono::milliseconds timeout = std::chrono::seconds(30))
      : endpoint_url_(std::move(endpoint_url)), timeout_(timeout) {}

  EmbeddingVector embed(std::string_view text) const override;
  std::string name() const override { return "remote:" + endpoint_url_; }

 private:
  std::string endpoint_url_;
  std::chrono::milliseconds timeout_;
};

double cosine(const EmbeddingVector& a, const EmbeddingVector& b);
double squared_l2(std::span<const float> a, std::span<const float> b);

struct RetrievalHit {
  std::string chunk_id;
  /// Cosine recovered from the L2 distance of unit vectors: 1 - d^2 / 2.
  double similarity = 0.0;

  bool operator==(const RetrievalHit&) const = default;
};

using RetrievalResult = std::vector<RetrievalHit>;

/// Exhaustive-scan L2 index over unit vectors.
class VectorIndex {
 public:
  struct Entry {
    std::string chunk_id;
    EmbeddingVector vector;
  };

  VectorIndex() = default;
  explicit VectorIndex(std::size_t dim) : dim_(dim) {}

  /// Throws IntegrityError on a duplicate id, DomainError on a dim mismatch.
  void add(std::string chunk_id, EmbeddingVector vector);

  /// Hits ranked by L2 distance ascending, ties by chunk id, keeping at most
  /// k with similarity >= threshold. Zero vectors never match.
  RetrievalResult search(const EmbeddingVector& query, std::size_t k, double threshold) const;

  std::size_t size() const { return entries_.size(); }
  std::size_t dim() const { return dim_; }
  const std::vector<Entry>& entries() const { return entries_; }

  /// Binary layout: "DQAIDX01", u32 dim, u64 count, then per entry u32 id
  /// length, id bytes, u8 zero flag, dim little-endian float32 values.
  void save(const std::string& path) const;
  static VectorIndex load(const std::string& path);

 private:
  std::size_t dim_ = 0;
  std::vector<Entry> entries_;
  std::set<std::string, std::less<>> ids_;
};

VectorIndex build_index(std::span<const Chunk> chunks, const Embedder& embedder);

RetrievalResult retrieve(const VectorIndex& index, std::string_view query, const Embedder& embedder,
                         std::size_t k = kDefaultTopK,
                         double threshold = kDefaultSimilarityThreshold);

/// Mean over queries of (relevant hits among the first three) / 3. Missing
/// slots count as irrelevant. Throws DomainError on empty or misaligned input.
double p_at_3(std::span<const RetrievalResult> results,
              std::span<const std::set<std::string>> labels);

/// Chunk texts by id, persisted as JSONL {chunk_id, doc_id, start, end, text}.
class ChunkStore {
 public:
  void add(const Chunk& chunk);
  void add_all(std::span<const Chunk> chunks);
  const Chunk* find(std::string_view chunk_id) const;
  std::size_t size() const { return chunks_.size(); }

  void save(const std::string& path) const;
  static ChunkStore load(const std::string& path);

 private:
  std::map<std::string, Chunk, std::less<>> chunks_;
};

}  // namespace dqa
