#pragma once

#include <cstdio>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace advtext::csv {

/// Quotes a field when it contains a separator, quote or line break.
std::string escape(std::string_view field);

void write_row(std::ostream& out, const std::vector<std::string>& fields);

/// Splits one logical record. Returns nullopt if a quoted field is left open,
/// in which case the caller appends the next physical line and retries.
std::optional<std::vector<std::string>> split_record(std::string_view record);

/// Fixed-precision rendering used by every report so reruns are byte-identical.
std::string format_number(double value, int precision = 6);

/// Empty string for an absent value.
std::string format_optional(const std::optional<double>& value, int precision = 6);

}  // namespace advtext::csv
