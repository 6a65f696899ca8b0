#include "qrouter/core.hpp"

#include <fstream>
#include <unordered_set>

#include "qrouter/json_io.hpp"
#include "qrouter/text.hpp"

namespace qrouter {

Query::Query(std::string text) : text_(std::move(text)) {
    if (text::trim(text_).empty()) {
        throw std::invalid_argument("query text is empty");
    }
}

std::string_view to_string(Role role) {
    return role == Role::user ? "user" : "assistant";
}

Role role_from_string(std::string_view s) {
    if (s == "user") return Role::user;
    if (s == "assistant") return Role::assistant;
    throw std::invalid_argument("unknown role \"" + std::string(s) + "\"");
}

std::string_view to_string(AmbiguityLabel label) {
    return label == AmbiguityLabel::clear ? "clear" : "ambiguous";
}

std::string_view to_string(AmbiguityType type) {
    switch (type) {
        case AmbiguityType::pragmatic: return "pragmatic";
        case AmbiguityType::syntactic: return "syntactic";
        case AmbiguityType::lexical: return "lexical";
        case AmbiguityType::unknown: return "unknown";
    }
    return "unknown";
}

std::string_view to_string(VerdictSource source) {
    return source == VerdictSource::model ? "model" : "lexical_override";
}

AmbiguityLabel label_from_string(std::string_view s) {
    if (s == "clear") return AmbiguityLabel::clear;
    if (s == "ambiguous") return AmbiguityLabel::ambiguous;
    throw std::invalid_argument("unknown label \"" + std::string(s) + "\"");
}

AmbiguityType type_from_string(std::string_view s) {
    if (s == "pragmatic") return AmbiguityType::pragmatic;
    if (s == "syntactic") return AmbiguityType::syntactic;
    if (s == "lexical") return AmbiguityType::lexical;
    if (s == "unknown") return AmbiguityType::unknown;
    throw std::invalid_argument("unknown ambiguity type \"" + std::string(s) + "\"");
}

VerdictSource source_from_string(std::string_view s) {
    if (s == "model") return VerdictSource::model;
    if (s == "lexical_override") return VerdictSource::lexical_override;
    throw std::invalid_argument("unknown verdict source \"" + std::string(s) + "\"");
}

DatasetError::DatasetError(std::size_t line, const std::string& message)
    : std::runtime_error(line ? "line " + std::to_string(line) + ": " + message : message),
      line_(line) {}

void to_json(json& j, const ChatTurn& turn) {
    j = json{{"role", to_string(turn.role)}, {"text", turn.text}};
}

void from_json(const json& j, ChatTurn& turn) {
    if (!j.is_object()) throw std::invalid_argument("history entry is not an object");
    if (!j.contains("role") || !j["role"].is_string()) {
        throw std::invalid_argument("history entry missing string \"role\"");
    }
    if (!j.contains("text") || !j["text"].is_string()) {
        throw std::invalid_argument("history entry missing string \"text\"");
    }
    turn.role = role_from_string(j["role"].get<std::string>());
    turn.text = j["text"].get<std::string>();
}

void to_json(json& j, const AmbiguityVerdict& verdict) {
    j = json{{"label", to_string(verdict.label)},
             {"type", to_string(verdict.ambiguity_type)},
             {"score", verdict.score},
             {"source", to_string(verdict.source)}};
}

std::vector<ChatTurn> history_from_json(const json& j) {
    if (!j.is_array()) throw std::invalid_argument("\"history\" is not an array");
    std::vector<ChatTurn> turns;
    turns.reserve(j.size());
    for (const auto& item : j) turns.push_back(item.get<ChatTurn>());
    return turns;
}

DatasetRecord record_from_json(const json& j) {
    if (!j.is_object()) throw std::invalid_argument("record is not an object");
    if (!j.contains("id") || !j["id"].is_string()) {
        throw std::invalid_argument("missing string field \"id\"");
    }
    std::string id = j["id"].get<std::string>();
    if (!j.contains("query") || !j["query"].is_string()) {
        throw std::invalid_argument("record \"" + id + "\": missing string field \"query\"");
    }
    std::string query_text = j["query"].get<std::string>();
    if (text::trim(query_text).empty()) {
        throw std::invalid_argument("record \"" + id + "\": empty query text");
    }
    DatasetRecord record{id, Query(std::move(query_text)), std::nullopt, {}, std::nullopt};
    if (j.contains("label") && !j["label"].is_null()) {
        if (!j["label"].is_string()) throw std::invalid_argument("record \"" + id + "\": label is not a string");
        record.label = label_from_string(j["label"].get<std::string>());
    }
    if (j.contains("history") && !j["history"].is_null()) {
        record.history = history_from_json(j["history"]);
    }
    if (j.contains("golden_rewrite") && !j["golden_rewrite"].is_null()) {
        if (!j["golden_rewrite"].is_string()) {
            throw std::invalid_argument("record \"" + id + "\": golden_rewrite is not a string");
        }
        record.golden_rewrite = j["golden_rewrite"].get<std::string>();
    }
    return record;
}

json record_to_json(const DatasetRecord& record) {
    json j{{"id", record.id}, {"query", record.query.text()}};
    if (record.label) j["label"] = to_string(*record.label);
    if (!record.history.empty()) j["history"] = record.history;
    if (record.golden_rewrite) j["golden_rewrite"] = *record.golden_rewrite;
    return j;
}

std::vector<DatasetRecord> parse_dataset(std::istream& in) {
    std::vector<DatasetRecord> records;
    std::unordered_set<std::string> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (text::trim(line).empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw DatasetError(line_no, std::string("malformed JSON: ") + e.what());
        }
        DatasetRecord record = [&] {
            try {
                return record_from_json(j);
            } catch (const std::invalid_argument& e) {
                throw DatasetError(line_no, e.what());
            } catch (const json::exception& e) {
                throw DatasetError(line_no, e.what());
            }
        }();
        if (!seen.insert(record.id).second) {
            throw DatasetError(line_no, "duplicate id \"" + record.id + "\"");
        }
        records.push_back(std::move(record));
    }
    return records;
}

std::vector<DatasetRecord> parse_dataset_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DatasetError(0, "cannot open " + path);
    return parse_dataset(in);
}

std::string serialize_record(const DatasetRecord& record) {
    return record_to_json(record).dump();
}

void write_dataset(std::ostream& out, const std::vector<DatasetRecord>& records) {
    for (const auto& r : records) out << serialize_record(r) << '\n';
}

Conversation truncate_history(const Conversation& conv, std::size_t k) {
    if (k == 0) throw std::invalid_argument("history window must be >= 1");
    Conversation out{{}, conv.current};
    std::size_t start = conv.turns.size() > k ? conv.turns.size() - k : 0;
    out.turns.assign(conv.turns.begin() + static_cast<std::ptrdiff_t>(start), conv.turns.end());
    return out;
}

}  // namespace qrouter
