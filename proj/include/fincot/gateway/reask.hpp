#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fincot/common/error.hpp"
#include "fincot/gateway/gateway.hpp"

namespace fincot::gateway {

template <typename T>
struct AskOutcome {
  std::optional<T> value;              // empty when every attempt was unparseable
  std::vector<std::string> raw_replies;  // one per attempt, in order
  std::string last_error;
  double cost = 0.0;
};

// Sends `req` and parses the reply with `parse`, which throws ValidationError
// on a malformed reply. Each re-ask appends the parse error to the user prompt
// and shifts the seed, so a deterministic mock can answer differently.
template <typename Parse>
auto ask_until_valid(Gateway& gw, const ChatRequest& req, int max_reasks, Parse&& parse)
    -> AskOutcome<decltype(parse(std::string{}))> {
  AskOutcome<decltype(parse(std::string{}))> out;
  for (int attempt = 0; attempt <= max_reasks; ++attempt) {
    ChatRequest r = req;
    if (attempt > 0) {
      r.user_prompt += "\n\nYour previous reply could not be used (" + out.last_error +
                       "). Reply again, following the required format exactly.";
      r.seed = req.seed.value_or(0) + attempt;
    }
    const auto resp = gw.complete(r);
    out.cost += resp.estimated_cost;
    out.raw_replies.push_back(resp.text);
    try {
      out.value = parse(resp.text);
      return out;
    } catch (const ValidationError& e) {
      out.last_error = e.what();
    }
  }
  return out;
}

}  // namespace fincot::gateway
