#pragma once

#include "advtext/rules.hpp"
#include "json.hpp"

namespace advtext::detail {

nlohmann::json bank_to_json(const RuleBank& bank);

/// Throws nlohmann::json::exception or DataError on malformed input.
RuleBank bank_from_json(const nlohmann::json& doc);

}  // namespace advtext::detail
