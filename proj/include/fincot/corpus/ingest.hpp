#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fincot/corpus/classifier.hpp"
#include "fincot/corpus/dedup.hpp"
#include "fincot/corpus/types.hpp"

namespace fincot::corpus {

struct IngestOptions {
  std::string classifier_provider;
  std::string embedding_provider;
  std::optional<std::string> rephrase_provider;  // set to enable the rephrase pass
  double threshold = 0.92;
  QuotaConfig quotas;
  std::uint64_t seed = 0;
  int workers = 4;
  int max_reasks = 3;
};

struct FunnelReport {
  std::size_t posts_in = 0;
  std::size_t empty_body = 0;
  std::size_t quarantined = 0;
  std::size_t not_applicable = 0;
  std::size_t topical = 0;
  std::size_t dedup_removed = 0;
  std::size_t sampled_out = 0;
  std::size_t emitted = 0;
  std::map<Category, std::size_t> classified;  // topical posts per category
  std::map<Category, std::size_t> emitted_by_category;
};

json to_json(const FunnelReport& f);
std::string render_funnel(const FunnelReport& f);

// One line per post in the classification log.
struct Decision {
  std::string post_id;
  std::optional<Category> category;  // unset for empty bodies
  bool quarantined = false;
  std::vector<std::string> raw_replies;
};

json to_json(const Decision& d);

struct IngestResult {
  std::vector<Query> queries;
  std::vector<Decision> decisions;  // input order
  FunnelReport funnel;
  double cost = 0.0;
};

// scrub -> classify -> (rephrase, re-scrub) -> embed -> dedup -> quota sample.
// Query ids are "q-<post_id>".
IngestResult ingest(gateway::Gateway& gw, const cot::TemplateSet& templates,
                    const std::vector<RawPost>& posts, const IngestOptions& options);

}  // namespace fincot::corpus
