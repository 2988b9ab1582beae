#pragma once

#include <string>
#include <string_view>

namespace fincot::corpus {

// Replaces URLs, emails, phone numbers, user handles and ID-like digit runs
// with [URL], [EMAIL], [PHONE], [HANDLE], [ID]. Currency amounts and ordinary
// numbers are left alone. Idempotent.
std::string scrub_pii(std::string_view text);

// True when scrub_pii would change the text.
bool contains_pii(std::string_view text);

}  // namespace fincot::corpus
