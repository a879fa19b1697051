#pragma once

#include <string>
#include <vector>

#include "json.hpp"

namespace bsdelay {

/// 17 significant digits, enough to round-trip any double.
std::string g17(double v);

std::string iso8601_utc_now();

/// Atomic write (temp file in the same directory, then rename).
void write_text_atomic(const std::string& path, const std::string& content);

void write_json_report(const nlohmann::json& report, const std::string& path);

/// CSV with a header row; numbers printed with g17.
void write_csv(const std::string& path, const std::vector<std::string>& columns,
               const std::vector<std::vector<double>>& rows);

}  // namespace bsdelay
