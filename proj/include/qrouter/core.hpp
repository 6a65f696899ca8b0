#pragma once

// Domain types shared across the library: queries, chat turns, labels,
// verdicts and labeled dataset records.

#include <cstddef>
#include <istream>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace qrouter {

/// A user query. Construction rejects text that is empty after trimming.
class Query {
public:
    explicit Query(std::string text);

    const std::string& text() const noexcept { return text_; }

    friend bool operator==(const Query&, const Query&) = default;

private:
    std::string text_;
};

enum class Role { user, assistant };

std::string_view to_string(Role role);
Role role_from_string(std::string_view s);

struct ChatTurn {
    Role role = Role::user;
    std::string text;

    friend bool operator==(const ChatTurn&, const ChatTurn&) = default;
};

/// Chronological history (oldest first) plus the query being routed.
struct Conversation {
    std::vector<ChatTurn> turns;
    Query current;
};

enum class AmbiguityLabel { clear, ambiguous };

enum class AmbiguityType { pragmatic, syntactic, lexical, unknown };

enum class VerdictSource { model, lexical_override };

std::string_view to_string(AmbiguityLabel label);
std::string_view to_string(AmbiguityType type);
std::string_view to_string(VerdictSource source);

AmbiguityLabel label_from_string(std::string_view s);
AmbiguityType type_from_string(std::string_view s);
VerdictSource source_from_string(std::string_view s);

struct AmbiguityVerdict {
    AmbiguityLabel label = AmbiguityLabel::clear;
    AmbiguityType ambiguity_type = AmbiguityType::unknown;
    double score = 0.0;  // P(ambiguous) from the model, kept even when overridden
    VerdictSource source = VerdictSource::model;

    friend bool operator==(const AmbiguityVerdict&, const AmbiguityVerdict&) = default;
};

struct DatasetRecord {
    std::string id;
    Query query;
    std::optional<AmbiguityLabel> label;
    std::vector<ChatTurn> history;
    std::optional<std::string> golden_rewrite;

    friend bool operator==(const DatasetRecord&, const DatasetRecord&) = default;
};

/// Raised for malformed dataset input. `line()` is 1-based, 0 when unknown.
class DatasetError : public std::runtime_error {
public:
    DatasetError(std::size_t line, const std::string& message);
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Parses one JSON object per line. Blank lines are skipped.
std::vector<DatasetRecord> parse_dataset(std::istream& in);
std::vector<DatasetRecord> parse_dataset_file(const std::string& path);

void write_dataset(std::ostream& out, const std::vector<DatasetRecord>& records);
std::string serialize_record(const DatasetRecord& record);

/// Keeps the last `k` turns. Requires k >= 1.
Conversation truncate_history(const Conversation& conv, std::size_t k);

}  // namespace qrouter
