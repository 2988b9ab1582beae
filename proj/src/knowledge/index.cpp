#include "fincot/knowledge/index.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>

#include <fmt/core.h>

#include "fincot/common/error.hpp"

namespace fincot::knowledge {

std::vector<Chunk> load_corpus_dir(const std::filesystem::path& dir, std::optional<CorpusTag> expected,
                                   std::size_t max_tokens) {
  const auto manifest_path = dir / "manifest.json";
  if (!std::filesystem::exists(manifest_path)) {
    throw ValidationError(fmt::format("{}: missing manifest.json", dir.string()));
  }
  const auto m = read_json_file(manifest_path);
  std::vector<Chunk> out;
  std::set<std::string> doc_ids;
  try {
    std::optional<CorpusTag> dir_tag;
    if (m.contains("corpus_tag")) dir_tag = parse_corpus_tag(m.at("corpus_tag").get<std::string>());
    for (const auto& d : m.at("documents")) {
      DocumentMetadata meta;
      const auto file = d.at("file").get<std::string>();
      meta.doc_id = d.value("doc_id", std::filesystem::path(file).stem().string());
      if (!doc_ids.insert(meta.doc_id).second) {
        throw ValidationError(fmt::format("duplicate doc_id '{}'", meta.doc_id));
      }
      meta.source = d.at("source").get<std::string>();
      meta.url_or_handle = d.value("url_or_handle", "");
      meta.snapshot_time = parse_timestamp_value(d.at("snapshot_time"));
      meta.priority = d.value("priority", 0);
      std::optional<CorpusTag> tag = dir_tag;
      if (d.contains("corpus_tag")) tag = parse_corpus_tag(d.at("corpus_tag").get<std::string>());
      if (!tag) tag = expected;
      if (!tag) throw ValidationError(fmt::format("document '{}' has no corpus_tag", meta.doc_id));
      if (expected && *tag != *expected) {
        throw ValidationError(fmt::format("document '{}' is tagged {} but the corpus is {}", meta.doc_id,
                                          corpus_tag_name(*tag), corpus_tag_name(*expected)));
      }
      meta.corpus_tag = *tag;
      auto chunks = chunk_markdown(read_text_file(dir / file), meta, max_tokens);
      std::move(chunks.begin(), chunks.end(), std::back_inserter(out));
    }
  } catch (const json::exception& e) {
    throw ValidationError(fmt::format("{}: {}", manifest_path.string(), e.what()));
  }
  return out;
}

void sort_scored(std::vector<ScoredChunk>& v) {
  std::sort(v.begin(), v.end(), [](const ScoredChunk& a, const ScoredChunk& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.chunk->chunk_id < b.chunk->chunk_id;
  });
}

void KnowledgeIndex::build(gateway::Gateway& gw, const std::string& embedding_provider,
                           std::vector<Chunk> chunks) {
  std::vector<std::string> texts;
  texts.reserve(chunks.size());
  for (const auto& c : chunks) texts.push_back(c.text);
  if (!texts.empty()) {
    auto vectors = gw.embed(embedding_provider, texts);
    for (std::size_t i = 0; i < chunks.size(); ++i) chunks[i].embedding = std::move(vectors[i]);
  }
  build_from(std::move(chunks), embedding_provider);
}

void KnowledgeIndex::build_from(std::vector<Chunk> chunks, std::string embedding_provider) {
  std::set<std::string> ids;
  std::size_t dim = 0;
  for (const auto& c : chunks) {
    if (!ids.insert(c.chunk_id).second) {
      throw ValidationError(fmt::format("duplicate chunk_id '{}'", c.chunk_id));
    }
    if (c.embedding.empty()) throw ValidationError(fmt::format("chunk '{}' has no embedding", c.chunk_id));
    if (dim == 0) dim = c.embedding.size();
    if (c.embedding.size() != dim) throw ValidationError("embedding dimension mismatch in index");
  }
  std::sort(chunks.begin(), chunks.end(),
            [](const Chunk& a, const Chunk& b) { return a.chunk_id < b.chunk_id; });
  chunks_ = std::move(chunks);
  embedding_provider_ = std::move(embedding_provider);
  dim_ = dim;
  built_ = true;
}

std::size_t KnowledgeIndex::size(CorpusTag tag) const {
  return static_cast<std::size_t>(
      std::count_if(chunks_.begin(), chunks_.end(), [tag](const Chunk& c) { return c.corpus_tag == tag; }));
}

const Chunk* KnowledgeIndex::find(std::string_view chunk_id) const {
  auto it = std::lower_bound(chunks_.begin(), chunks_.end(), chunk_id,
                             [](const Chunk& c, std::string_view id) { return c.chunk_id < id; });
  return it != chunks_.end() && it->chunk_id == chunk_id ? &*it : nullptr;
}

std::vector<ScoredChunk> KnowledgeIndex::search(const gateway::Embedding& query, CorpusTag tag,
                                                std::size_t k) const {
  if (!built_) throw ValidationError("index not built");
  if (k < 1) throw ValidationError("k must be >= 1");
  if (query.size() != dim_) throw ValidationError("query embedding dimension mismatch");
  double qq = 0;
  for (float x : query) qq += static_cast<double>(x) * x;
  std::vector<ScoredChunk> scored;
  for (const auto& c : chunks_) {
    if (c.corpus_tag != tag) continue;
    double dot = 0, cc = 0;
    for (std::size_t i = 0; i < dim_; ++i) {
      dot += static_cast<double>(query[i]) * c.embedding[i];
      cc += static_cast<double>(c.embedding[i]) * c.embedding[i];
    }
    scored.push_back({&c, qq > 0 && cc > 0 ? dot / std::sqrt(qq * cc) : 0.0});
  }
  if (scored.empty()) throw ValidationError(fmt::format("corpus '{}' is empty", corpus_tag_name(tag)));
  const auto keep = std::min(k, scored.size());
  const auto cmp = [](const ScoredChunk& a, const ScoredChunk& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.chunk->chunk_id < b.chunk->chunk_id;
  };
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(keep), scored.end(), cmp);
  scored.resize(keep);
  return scored;
}

namespace {

// Little-endian, fixed-width encoding.
class Writer {
 public:
  explicit Writer(std::ostream& os) : os_(os) {}
  template <typename T>
  void num(T v) {
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
    os_.write(reinterpret_cast<const char*>(b), sizeof(T));
  }
  void str(std::string_view s) {
    num(static_cast<std::uint32_t>(s.size()));
    os_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }

 private:
  std::ostream& os_;
};

class Reader {
 public:
  explicit Reader(std::istream& is) : is_(is) {}
  template <typename T>
  T num() {
    unsigned char b[sizeof(T)];
    if (!is_.read(reinterpret_cast<char*>(b), sizeof(T))) throw ValidationError("index file truncated");
    if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
    T v;
    std::memcpy(&v, b, sizeof(T));
    return v;
  }
  std::string str() {
    const auto n = num<std::uint32_t>();
    if (n > (1u << 28)) throw ValidationError("index file corrupt");
    std::string s(n, '\0');
    if (n && !is_.read(s.data(), n)) throw ValidationError("index file truncated");
    return s;
  }

 private:
  std::istream& is_;
};

constexpr char kMagic[4] = {'F', 'C', 'K', 'I'};

}  // namespace

void KnowledgeIndex::save(const std::filesystem::path& path) const {
  if (!built_) throw ValidationError("index not built");
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error(fmt::format("cannot write {}", path.string()));
  os.write(kMagic, 4);
  Writer w(os);
  w.num(kIndexVersion);
  w.num(static_cast<std::uint32_t>(dim_));
  w.str(embedding_provider_);
  w.num(static_cast<std::uint64_t>(chunks_.size()));
  for (const auto& c : chunks_) {
    w.str(c.chunk_id);
    w.num(static_cast<std::uint8_t>(c.corpus_tag));
    w.str(c.source);
    w.str(c.url_or_handle);
    w.num(static_cast<std::int64_t>(c.snapshot_time.time_since_epoch().count()));
    w.num(static_cast<std::uint32_t>(c.section_path.size()));
    for (const auto& s : c.section_path) w.str(s);
    w.str(c.text);
    w.num(static_cast<std::int32_t>(c.priority));
    for (float x : c.embedding) w.num(x);
  }
  if (!os) throw Error(fmt::format("write failed for {}", path.string()));
}

KnowledgeIndex KnowledgeIndex::load(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ValidationError(fmt::format("index file {} not found", path.string()));
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
    throw ValidationError(fmt::format("{} is not an index file", path.string()));
  }
  Reader r(is);
  const auto version = r.num<std::uint32_t>();
  if (version != kIndexVersion) {
    throw ValidationError(fmt::format("index version {} unsupported (expected {})", version, kIndexVersion));
  }
  const auto dim = r.num<std::uint32_t>();
  auto provider = r.str();
  const auto n = r.num<std::uint64_t>();
  std::vector<Chunk> chunks;
  for (std::uint64_t i = 0; i < n; ++i) {
    Chunk c;
    c.chunk_id = r.str();
    const auto tag = r.num<std::uint8_t>();
    if (tag > 1) throw ValidationError("index file corrupt: corpus tag");
    c.corpus_tag = static_cast<CorpusTag>(tag);
    c.source = r.str();
    c.url_or_handle = r.str();
    c.snapshot_time = Timestamp(std::chrono::seconds(r.num<std::int64_t>()));
    const auto parts = r.num<std::uint32_t>();
    for (std::uint32_t p = 0; p < parts; ++p) c.section_path.push_back(r.str());
    c.text = r.str();
    c.priority = r.num<std::int32_t>();
    c.embedding.resize(dim);
    for (auto& x : c.embedding) x = r.num<float>();
    chunks.push_back(std::move(c));
  }
  KnowledgeIndex index;
  index.build_from(std::move(chunks), std::move(provider));
  return index;
}

std::vector<ScoredChunk> retrieve(gateway::Gateway& gw, const KnowledgeIndex& index,
                                  std::string_view query_text, CorpusTag tag, std::size_t k) {
  if (!index.built()) throw ValidationError("index not built");
  const auto q = gw.embed(index.embedding_provider(), {std::string(query_text)});
  return index.search(q.at(0), tag, k);
}

}  // namespace fincot::knowledge
