#pragma once

// nlohmann/json conversions for the wire and file formats.

#include <nlohmann/json.hpp>

#include "qrouter/core.hpp"

namespace qrouter {

using json = nlohmann::json;

void to_json(json& j, const ChatTurn& turn);
void from_json(const json& j, ChatTurn& turn);
void to_json(json& j, const AmbiguityVerdict& verdict);

/// Strict record conversion; throws std::invalid_argument with a message
/// naming the offending field.
DatasetRecord record_from_json(const json& j);
json record_to_json(const DatasetRecord& record);

std::vector<ChatTurn> history_from_json(const json& j);

}  // namespace qrouter
