#include "fincot/corpus/ingest.hpp"

#include <fmt/core.h>

#include "fincot/common/parallel.hpp"
#include "fincot/common/text.hpp"
#include "fincot/corpus/pii.hpp"
#include "fincot/gateway/reask.hpp"

namespace fincot::corpus {

json to_json(const FunnelReport& f) {
  json classified = json::object();
  json emitted = json::object();
  for (auto c : kDatasetCategories) {
    const std::string label(category_label(c));
    classified[label] = f.classified.count(c) ? f.classified.at(c) : 0;
    emitted[label] = f.emitted_by_category.count(c) ? f.emitted_by_category.at(c) : 0;
  }
  return json{{"posts_in", f.posts_in},       {"empty_body", f.empty_body},
              {"quarantined", f.quarantined}, {"not_applicable", f.not_applicable},
              {"topical", f.topical},         {"dedup_removed", f.dedup_removed},
              {"sampled_out", f.sampled_out}, {"emitted", f.emitted},
              {"classified", classified},     {"emitted_by_category", emitted}};
}

std::string render_funnel(const FunnelReport& f) {
  std::string out;
  out += fmt::format("{:<34}{:>8}\n", "posts in", f.posts_in);
  out += fmt::format("{:<34}{:>8}\n", "empty body", f.empty_body);
  out += fmt::format("{:<34}{:>8}\n", "quarantined", f.quarantined);
  out += fmt::format("{:<34}{:>8}\n", "not applicable", f.not_applicable);
  out += fmt::format("{:<34}{:>8}\n", "topically valid", f.topical);
  out += fmt::format("{:<34}{:>8}\n", "removed as near-duplicates", f.dedup_removed);
  out += fmt::format("{:<34}{:>8}\n", "removed by quota", f.sampled_out);
  out += fmt::format("{:<34}{:>8}\n", "emitted", f.emitted);
  out += "\n";
  out += fmt::format("{:<34}{:>10}{:>9}\n", "category", "classified", "emitted");
  for (auto c : kDatasetCategories) {
    const auto get = [c](const std::map<Category, std::size_t>& m) {
      auto it = m.find(c);
      return it == m.end() ? std::size_t{0} : it->second;
    };
    out += fmt::format("{:<34}{:>10}{:>9}\n", category_label(c), get(f.classified),
                       get(f.emitted_by_category));
  }
  return out;
}

json to_json(const Decision& d) {
  return json{{"post_id", d.post_id},
              {"category", d.category ? json(std::string(category_label(*d.category))) : json(nullptr)},
              {"quarantined", d.quarantined},
              {"raw_replies", d.raw_replies}};
}

namespace {

std::string rephrase(gateway::Gateway& gw, const cot::TemplateSet& templates,
                     const std::string& provider, const std::string& text, std::int64_t seed,
                     double* cost) {
  gateway::ChatRequest req;
  req.provider_id = provider;
  req.system_prompt = gateway::task_marker("rephrase");
  req.user_prompt = cot::render_prompt(templates.get("rephrase"), {{"query", text}});
  req.temperature = 0.3;
  req.seed = seed;
  const auto resp = gw.complete(req);
  *cost += resp.estimated_cost;
  // A rewrite that comes back empty keeps the scrubbed original.
  auto out = std::string(trim(resp.text));
  return out.empty() ? text : scrub_pii(out);
}

}  // namespace

IngestResult ingest(gateway::Gateway& gw, const cot::TemplateSet& templates,
                    const std::vector<RawPost>& posts, const IngestOptions& options) {
  IngestResult result;
  result.funnel.posts_in = posts.size();
  const CategoryClassifier classifier(gw, options.classifier_provider, templates,
                                      static_cast<std::int64_t>(options.seed), options.max_reasks);

  struct Slot {
    std::string text;
    Decision decision;
    double cost = 0.0;
  };
  std::vector<Slot> slots(posts.size());
  parallel_for(posts.size(), options.workers, [&](std::size_t i) {
    const auto& post = posts[i];
    auto& slot = slots[i];
    slot.decision.post_id = post.post_id;
    if (trim(post.body).empty()) return;
    slot.text = scrub_pii(post_text(post));
    auto c = classifier.classify(slot.text);
    slot.cost += c.cost;
    slot.decision.category = c.category;
    slot.decision.quarantined = c.quarantined;
    slot.decision.raw_replies = std::move(c.raw_replies);
    if (options.rephrase_provider && !c.quarantined && c.category != Category::kNotApplicable) {
      slot.text = rephrase(gw, templates, *options.rephrase_provider, slot.text,
                           static_cast<std::int64_t>(options.seed), &slot.cost);
    }
  });

  std::vector<Query> topical;
  for (std::size_t i = 0; i < posts.size(); ++i) {
    auto& slot = slots[i];
    result.cost += slot.cost;
    const auto& d = slot.decision;
    if (!d.category) {
      ++result.funnel.empty_body;
    } else if (d.quarantined) {
      ++result.funnel.quarantined;
    } else if (*d.category == Category::kNotApplicable) {
      ++result.funnel.not_applicable;
    } else {
      ++result.funnel.classified[*d.category];
      Query q;
      q.query_id = "q-" + posts[i].post_id;
      q.text = slot.text;
      q.category = *d.category;
      q.source_post = posts[i].post_id;
      q.token_count = whitespace_token_count(q.text);
      topical.push_back(std::move(q));
    }
    result.decisions.push_back(std::move(slot.decision));
  }
  result.funnel.topical = topical.size();

  std::vector<Query> unique;
  if (!topical.empty()) {
    std::vector<std::string> texts;
    for (const auto& q : topical) texts.push_back(q.text);
    const auto vectors = gw.embed(options.embedding_provider, texts);
    unique = cluster_dedup(topical, vectors, options.threshold);
  }
  result.funnel.dedup_removed = topical.size() - unique.size();

  result.queries = quota_sample(unique, options.quotas, options.seed);
  result.funnel.sampled_out = unique.size() - result.queries.size();
  result.funnel.emitted = result.queries.size();
  for (const auto& q : result.queries) ++result.funnel.emitted_by_category[q.category];
  return result;
}

}  // namespace fincot::corpus
