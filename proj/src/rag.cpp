#include "dqa/rag.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "dqa/error.hpp"
#include "dqa/http.hpp"
#include "dqa/text.hpp"

namespace dqa {

namespace {

constexpr char kIndexMagic[8] = {'D', 'Q', 'A', 'I', 'D', 'X', '0', '1'};

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out += static_cast<char>((v >> (8 * i)) & 0xFF);
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out += static_cast<char>((v >> (8 * i)) & 0xFF);
}

class Reader {
 public:
  explicit Reader(std::string data) : data_(std::move(data)) {}

  std::uint64_t uint(int bytes) {
    need(static_cast<std::size_t>(bytes));
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    }
    pos_ += static_cast<std::size_t>(bytes);
    return v;
  }

  std::string bytes(std::size_t n) {
    need(n);
    auto s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  bool done() const { return pos_ == data_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > data_.size()) throw ParseError("index file truncated");
  }
  std::string data_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<Chunk> segment_text(const Document& doc, std::size_t seg_len, std::size_t overlap) {
  if (seg_len == 0 || overlap >= seg_len) {
    throw DomainError("segmentation requires 0 <= overlap < seg_len");
  }
  std::vector<Chunk> out;
  auto bounds = text::utf8_boundaries(doc.body);
  const std::size_t n = bounds.size() - 1;
  if (n == 0) return out;
  const std::size_t stride = seg_len - overlap;
  for (std::size_t start = 0;; start += stride) {
    const std::size_t end = std::min(start + seg_len, n);
    Chunk c;
    c.chunk_id = doc.doc_id + "#" + std::to_string(out.size());
    c.doc_id = doc.doc_id;
    c.start = start;
    c.end = end;
    c.text = doc.body.substr(bounds[start], bounds[end] - bounds[start]);
    out.push_back(std::move(c));
    if (end == n) break;
  }
  return out;
}

EmbeddingVector EmbeddingVector::normalized(std::vector<float> raw) {
  double norm2 = 0.0;
  for (float v : raw) norm2 += static_cast<double>(v) * static_cast<double>(v);
  EmbeddingVector out;
  if (norm2 == 0.0) {
    out.values.assign(raw.size(), 0.0f);
    out.zero = true;
    return out;
  }
  const double inv = 1.0 / std::sqrt(norm2);
  out.values.resize(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    out.values[i] = static_cast<float>(static_cast<double>(raw[i]) * inv);
  }
  return out;
}

EmbeddingVector TrigramEmbedder::embed(std::string_view s) const {
  std::vector<float> counts(kDim, 0.0f);
  auto bounds = text::utf8_boundaries(s);
  const std::size_t n = bounds.size() - 1;
  if (n > 0 && n < 3) {
    counts[text::fnv1a_32(s) % kDim] += 1.0f;
  }
  for (std::size_t i = 0; i + 3 <= n; ++i) {
    auto gram = s.substr(bounds[i], bounds[i + 3] - bounds[i]);
    counts[text::fnv1a_32(gram) % kDim] += 1.0f;
  }
  return EmbeddingVector::normalized(std::move(counts));
}

EmbeddingVector RemoteEmbedder::embed(std::string_view s) const {
  auto j = http::post_json_expect_ok(endpoint_url_, {{"text", std::string(s)}}, timeout_);
  try {
    return EmbeddingVector::normalized(j.at("vector").get<std::vector<float>>());
  } catch (const nlohmann::json::exception& e) {
    throw ServiceError("embedding service reply lacks a numeric vector: " + std::string(e.what()));
  }
}

double squared_l2(std::span<const float> a, std::span<const float> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    acc += d * d;
  }
  return acc;
}

double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.dim() != b.dim()) throw DomainError("cosine of vectors with different dims");
  double dot = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) {
    dot += static_cast<double>(a.values[i]) * b.values[i];
    na += static_cast<double>(a.values[i]) * a.values[i];
    nb += static_cast<double>(b.values[i]) * b.values[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / std::sqrt(na * nb);
}

void VectorIndex::add(std::string chunk_id, EmbeddingVector vector) {
  if (entries_.empty() && dim_ == 0) dim_ = vector.dim();
  if (vector.dim() != dim_) {
    throw DomainError("vector for '" + chunk_id + "' has dim " + std::to_string(vector.dim()) +
                      ", index expects " + std::to_string(dim_));
  }
  if (!ids_.insert(chunk_id).second) throw IntegrityError("duplicate chunk id '" + chunk_id + "'");
  entries_.push_back({std::move(chunk_id), std::move(vector)});
}

RetrievalResult VectorIndex::search(const EmbeddingVector& query, std::size_t k,
                                    double threshold) const {
  RetrievalResult out;
  if (query.zero || k == 0 || entries_.empty()) return out;
  if (query.dim() != dim_) throw DomainError("query dim does not match index dim");

  struct Scored {
    double dist2;
    const std::string* id;
  };
  std::vector<Scored> scored;
  scored.reserve(entries_.size());
  for (const auto& e : entries_) {
    if (e.vector.zero) continue;
    const double d2 = squared_l2(query.values, e.vector.values);
    if (1.0 - d2 / 2.0 >= threshold) scored.push_back({d2, &e.chunk_id});
  }
  auto by_rank = [](const Scored& a, const Scored& b) {
    if (a.dist2 != b.dist2) return a.dist2 < b.dist2;
    return *a.id < *b.id;
  };
  const std::size_t keep = std::min(k, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(keep), scored.end(),
                    by_rank);
  out.reserve(keep);
  for (std::size_t i = 0; i < keep; ++i) {
    out.push_back({*scored[i].id, 1.0 - scored[i].dist2 / 2.0});
  }
  return out;
}

void VectorIndex::save(const std::string& path) const {
  std::string out(kIndexMagic, sizeof kIndexMagic);
  put_u32(out, static_cast<std::uint32_t>(dim_));
  put_u64(out, entries_.size());
  for (const auto& e : entries_) {
    put_u32(out, static_cast<std::uint32_t>(e.chunk_id.size()));
    out += e.chunk_id;
    out += static_cast<char>(e.vector.zero ? 1 : 0);
    for (float v : e.vector.values) put_u32(out, std::bit_cast<std::uint32_t>(v));
  }
  text::write_file(path, out);
}

VectorIndex VectorIndex::load(const std::string& path) {
  Reader in(text::read_file(path));
  if (in.bytes(sizeof kIndexMagic) != std::string(kIndexMagic, sizeof kIndexMagic)) {
    throw ParseError(path + ": not a vector index file");
  }
  VectorIndex index(static_cast<std::size_t>(in.uint(4)));
  const auto count = in.uint(8);
  for (std::uint64_t i = 0; i < count; ++i) {
    auto id = in.bytes(static_cast<std::size_t>(in.uint(4)));
    EmbeddingVector v;
    v.zero = in.uint(1) != 0;
    v.values.resize(index.dim_);
    for (auto& f : v.values) f = std::bit_cast<float>(static_cast<std::uint32_t>(in.uint(4)));
    index.add(std::move(id), std::move(v));
  }
  if (!in.done()) throw ParseError(path + ": trailing bytes after index entries");
  return index;
}

VectorIndex build_index(std::span<const Chunk> chunks, const Embedder& embedder) {
  VectorIndex index;
  for (const auto& c : chunks) index.add(c.chunk_id, embedder.embed(c.text));
  return index;
}

RetrievalResult retrieve(const VectorIndex& index, std::string_view query, const Embedder& embedder,
                         std::size_t k, double threshold) {
  if (index.size() == 0) return {};
  return index.search(embedder.embed(query), k, threshold);
}

double p_at_3(std::span<const RetrievalResult> results, std::span<const std::set<std::string>> labels) {
  if (results.empty()) throw DomainError("P@3 over an empty query set");
  if (results.size() != labels.size()) throw DomainError("P@3 results and labels are misaligned");
  std::size_t relevant = 0;
  for (std::size_t j = 0; j < results.size(); ++j) {
    const std::size_t top = std::min<std::size_t>(3, results[j].size());
    for (std::size_t i = 0; i < top; ++i) {
      if (labels[j].contains(results[j][i].chunk_id)) ++relevant;
    }
  }
  return static_cast<double>(relevant) / (3.0 * static_cast<double>(results.size()));
}

void ChunkStore::add(const Chunk& chunk) {
  if (!chunks_.emplace(chunk.chunk_id, chunk).second) {
    throw IntegrityError("duplicate chunk id '" + chunk.chunk_id + "'");
  }
}

void ChunkStore::add_all(std::span<const Chunk> chunks) {
  for (const auto& c : chunks) add(c);
}

const Chunk* ChunkStore::find(std::string_view chunk_id) const {
  auto it = chunks_.find(chunk_id);
  return it == chunks_.end() ? nullptr : &it->second;
}

void ChunkStore::save(const std::string& path) const {
  std::string out;
  for (const auto& [id, c] : chunks_) {
    nlohmann::ordered_json j;
    j["chunk_id"] = c.chunk_id;
    j["doc_id"] = c.doc_id;
    j["start"] = c.start;
    j["end"] = c.end;
    j["text"] = c.text;
    out += j.dump();
    out += '\n';
  }
  text::write_file(path, out);
}

ChunkStore ChunkStore::load(const std::string& path) {
  ChunkStore store;
  auto lines = text::split_lines(text::read_file(path));
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (text::trim(lines[i]).empty()) continue;
    try {
      auto j = nlohmann::json::parse(lines[i]);
      Chunk c;
      c.chunk_id = j.at("chunk_id").get<std::string>();
      c.doc_id = j.value("doc_id", std::string{});
      c.start = j.value("start", std::size_t{0});
      c.end = j.value("end", std::size_t{0});
      c.text = j.at("text").get<std::string>();
      store.add(c);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path + " line " + std::to_string(i + 1) + ": " + e.what());
    }
  }
  return store;
}

}  // namespace dqa
