#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "fincot/cot/prompt.hpp"

namespace fincot::cot {

// Named prompt templates. Starts with the built-in set; a directory of
// "<name>.tmpl" files overrides entries by name.
class TemplateSet {
 public:
  static TemplateSet builtin();

  void load_overrides(const std::filesystem::path& dir);
  void put(PromptTemplate tmpl);

  const PromptTemplate& get(std::string_view name) const;
  const PromptTemplate& for_phase(PhaseKind kind) const;
  bool contains(std::string_view name) const;
  std::vector<std::string> names() const;

  // "query_analysis@1,context_analysis@1,..." for record provenance.
  std::map<std::string, int> versions() const;

 private:
  std::map<std::string, PromptTemplate, std::less<>> templates_;
};

std::string_view template_name(PhaseKind kind);

}  // namespace fincot::cot
