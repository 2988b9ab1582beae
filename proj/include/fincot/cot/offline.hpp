#pragma once

#include "fincot/gateway/mock_backend.hpp"

namespace fincot::cot {

// Registers the offline responders for every task the pipeline sends:
// classify, rephrase, condense, the five phases and judge. Fixture entries in
// the backend still take precedence.
void install_offline_responders(gateway::MockBackend& backend);

}  // namespace fincot::cot
