#include "fincot/knowledge/chunk.hpp"

#include <fmt/core.h>

#include "fincot/common/error.hpp"
#include "fincot/common/text.hpp"

namespace fincot::knowledge {

std::string_view corpus_tag_name(CorpusTag tag) {
  return tag == CorpusTag::kFinancial ? "financial" : "behavioral";
}

CorpusTag parse_corpus_tag(std::string_view name) {
  const auto n = to_lower(trim(name));
  if (n == "financial") return CorpusTag::kFinancial;
  if (n == "behavioral" || n == "behavioural") return CorpusTag::kBehavioral;
  throw ValidationError(fmt::format("unknown corpus tag '{}'", name));
}

namespace {

struct Header {
  int level;
  std::string title;
};

std::optional<Header> atx_header(std::string_view line) {
  std::size_t i = 0;
  while (i < line.size() && i < 3 && line[i] == ' ') ++i;
  std::size_t hashes = 0;
  while (i + hashes < line.size() && line[i + hashes] == '#') ++hashes;
  if (hashes == 0 || hashes > 6) return std::nullopt;
  const auto rest = line.substr(i + hashes);
  if (!rest.empty() && rest[0] != ' ' && rest[0] != '\t') return std::nullopt;
  auto title = std::string(trim(rest));
  // Optional closing sequence: "## Title ##"
  auto end = title.find_last_not_of('#');
  if (end != std::string::npos && end + 1 < title.size() && (title[end] == ' ' || title[end] == '\t')) {
    title = std::string(trim(title.substr(0, end + 1)));
  } else if (end == std::string::npos) {
    title.clear();
  }
  return Header{static_cast<int>(hashes), title};
}

bool fence_line(std::string_view line) {
  const auto t = trim(line);
  return t.rfind("```", 0) == 0 || t.rfind("~~~", 0) == 0;
}

struct Section {
  std::vector<std::string> path;
  std::vector<std::string> lines;
};

void strip_blank_edges(std::vector<std::string>& lines) {
  while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
  std::size_t lead = 0;
  while (lead < lines.size() && trim(lines[lead]).empty()) ++lead;
  lines.erase(lines.begin(), lines.begin() + static_cast<std::ptrdiff_t>(lead));
}

// Blank-line separated blocks; fenced code stays in one block.
std::vector<std::string> paragraphs(const std::vector<std::string>& lines) {
  std::vector<std::string> out;
  std::vector<std::string> cur;
  bool fenced = false;
  for (const auto& line : lines) {
    if (fence_line(line)) fenced = !fenced;
    if (!fenced && trim(line).empty()) {
      if (!cur.empty()) out.push_back(join(cur, "\n"));
      cur.clear();
      continue;
    }
    cur.push_back(line);
  }
  if (!cur.empty()) out.push_back(join(cur, "\n"));
  // A block of bare header lines travels with the block after it.
  std::vector<std::string> merged;
  std::string pending;
  for (auto& p : out) {
    bool headers_only = true;
    for (const auto& line : split_lines(p)) headers_only = headers_only && atx_header(line).has_value();
    if (headers_only) {
      pending += p + "\n\n";
      continue;
    }
    merged.push_back(pending + p);
    pending.clear();
  }
  if (!pending.empty()) merged.push_back(pending.substr(0, pending.size() - 2));
  return merged;
}

std::vector<std::string> split_words(std::string_view text, std::size_t max_tokens) {
  std::vector<std::string> out;
  std::string cur;
  std::size_t n = 0;
  for (auto tok : whitespace_tokens(text)) {
    if (n == max_tokens) {
      out.push_back(std::move(cur));
      cur.clear();
      n = 0;
    }
    if (!cur.empty()) cur += ' ';
    cur += tok;
    ++n;
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::vector<std::string> pack(const std::vector<std::string>& lines, std::size_t max_tokens) {
  const auto whole = join(lines, "\n");
  if (whitespace_token_count(whole) <= max_tokens) return {whole};
  std::vector<std::string> out;
  std::string cur;
  std::size_t cur_tokens = 0;
  const auto flush = [&] {
    if (!cur.empty()) out.push_back(std::move(cur));
    cur.clear();
    cur_tokens = 0;
  };
  for (const auto& para : paragraphs(lines)) {
    const auto n = whitespace_token_count(para);
    if (n > max_tokens) {
      flush();
      for (auto& piece : split_words(para, max_tokens)) out.push_back(std::move(piece));
      continue;
    }
    if (cur_tokens + n > max_tokens) flush();
    if (!cur.empty()) cur += "\n\n";
    cur += para;
    cur_tokens += n;
  }
  flush();
  return out;
}

}  // namespace

std::vector<Chunk> chunk_markdown(std::string_view document, const DocumentMetadata& meta,
                                  std::size_t max_tokens) {
  if (max_tokens == 0) throw ValidationError("max_tokens must be positive");
  std::vector<Section> sections(1);
  std::vector<Header> stack;
  bool fenced = false;
  for (auto& line : split_lines(document)) {
    if (fence_line(line)) fenced = !fenced;
    if (!fenced) {
      if (auto h = atx_header(line)) {
        while (!stack.empty() && stack.back().level >= h->level) stack.pop_back();
        stack.push_back(*h);
        Section s;
        for (const auto& e : stack) s.path.push_back(e.title);
        sections.push_back(std::move(s));
      }
    }
    sections.back().lines.push_back(std::move(line));
  }

  std::vector<Chunk> out;
  // A header with no body of its own ("# Title" directly followed by "## A")
  // is carried into the next section's first chunk.
  std::vector<std::string> carried;
  for (std::size_t si = 0; si < sections.size(); ++si) {
    auto& s = sections[si];
    strip_blank_edges(s.lines);
    if (s.lines.empty()) continue;
    if (s.lines.size() == 1 && !s.path.empty() && si + 1 < sections.size()) {
      carried.push_back(s.lines[0]);
      carried.emplace_back();
      continue;
    }
    s.lines.insert(s.lines.begin(), carried.begin(), carried.end());
    carried.clear();
    for (auto& text : pack(s.lines, max_tokens)) {
      Chunk c;
      c.chunk_id = fmt::format("{}#{:03d}", meta.doc_id, out.size());
      c.corpus_tag = meta.corpus_tag;
      c.source = meta.source;
      c.url_or_handle = meta.url_or_handle;
      c.snapshot_time = meta.snapshot_time;
      c.section_path = s.path;
      c.text = std::move(text);
      c.priority = meta.priority;
      out.push_back(std::move(c));
    }
  }
  if (out.empty()) throw ValidationError(fmt::format("document '{}' is empty", meta.doc_id));
  return out;
}

json to_json(const Chunk& c, bool with_embedding) {
  json j{{"chunk_id", c.chunk_id},
         {"corpus_tag", std::string(corpus_tag_name(c.corpus_tag))},
         {"source", c.source},
         {"url_or_handle", c.url_or_handle},
         {"snapshot_time", format_utc(c.snapshot_time)},
         {"section_path", c.section_path},
         {"priority", c.priority},
         {"text", c.text}};
  if (with_embedding) j["embedding"] = c.embedding;
  return j;
}

Chunk chunk_from_json(const json& j) {
  Chunk c;
  c.chunk_id = j.at("chunk_id").get<std::string>();
  c.corpus_tag = parse_corpus_tag(j.at("corpus_tag").get<std::string>());
  c.source = j.value("source", "");
  c.url_or_handle = j.value("url_or_handle", "");
  c.snapshot_time = parse_timestamp_value(j.at("snapshot_time"));
  c.section_path = j.value("section_path", std::vector<std::string>{});
  c.priority = j.value("priority", 0);
  c.text = j.at("text").get<std::string>();
  if (j.contains("embedding")) c.embedding = j.at("embedding").get<gateway::Embedding>();
  return c;
}

}  // namespace fincot::knowledge
