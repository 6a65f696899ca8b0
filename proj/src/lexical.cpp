#include "qrouter/lexical.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <regex>
#include <stdexcept>

#include "qrouter/text.hpp"

namespace qrouter {
namespace {

bool starts_with_ci(std::string_view s, std::string_view prefix) {
    if (s.size() < prefix.size()) return false;
    for (std::size_t i = 0; i < prefix.size(); ++i) {
        if (std::tolower(static_cast<unsigned char>(s[i])) != prefix[i]) return false;
    }
    return true;
}

bool is_link(std::string_view token) {
    return starts_with_ci(token, "http://") || starts_with_ci(token, "https://") || starts_with_ci(token, "www.");
}

constexpr std::string_view kLeadingPunct = "([{\"'";
constexpr std::string_view kTrailingPunct = ".,!?;:)]}\"'";

struct Token {
    std::size_t start;
    std::size_t end;
};

std::vector<Token> tokenize(std::string_view s) {
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && text::is_space(s[i])) ++i;
        std::size_t start = i;
        while (i < s.size() && !text::is_space(s[i])) ++i;
        if (i > start) out.push_back({start, i});
    }
    return out;
}

// Opening quote followed by its closing sequence.
struct QuotePair {
    std::string_view open;
    std::string_view close;
};

constexpr QuotePair kQuotes[] = {
    {"'", "'"},
    {"\"", "\""},
    {"\xE2\x80\x98", "\xE2\x80\x99"},  // ‘ ’
    {"\xE2\x80\x9C", "\xE2\x80\x9D"},  // “ ”
};

bool opens_at_boundary(std::string_view s, std::size_t i) {
    if (i == 0) return true;
    char prev = s[i - 1];
    return text::is_space(prev) || prev == '(' || prev == '[';
}

bool closes_at_boundary(std::string_view s, std::size_t after) {
    if (after >= s.size()) return true;
    auto next = static_cast<unsigned char>(s[after]);
    return !std::isalnum(next);
}

// Non-greedy, non-nesting quoted spans: [start, end) including the quotes.
std::vector<std::pair<std::size_t, std::size_t>> find_quoted(std::string_view s) {
    std::vector<std::pair<std::size_t, std::size_t>> spans;
    std::size_t i = 0;
    while (i < s.size()) {
        bool matched = false;
        for (const auto& q : kQuotes) {
            if (s.substr(i, q.open.size()) != q.open || !opens_at_boundary(s, i)) continue;
            std::size_t search = i + q.open.size();
            while (true) {
                std::size_t j = s.find(q.close, search);
                if (j == std::string_view::npos) break;
                std::size_t after = j + q.close.size();
                if (j > i + q.open.size() && closes_at_boundary(s, after)) {
                    spans.emplace_back(i, after);
                    i = after;
                    matched = true;
                    break;
                }
                search = j + 1;
            }
            if (matched) break;
        }
        if (!matched) ++i;
    }
    return spans;
}

bool is_ordinal(std::string_view core) {
    static const std::regex ordinal("^[0-9]+(st|nd|rd|th)$", std::regex::icase);
    return std::regex_match(core.begin(), core.end(), ordinal);
}

bool is_alpha_hyphenated(std::string_view core) {
    static const std::regex hyphenated("^[A-Za-z]+(-[A-Za-z]+)+$");
    return std::regex_match(core.begin(), core.end(), hyphenated);
}

bool has_trigger(std::string_view core) {
    bool trigger = false;
    bool alnum = false;
    for (char c : core) {
        auto u = static_cast<unsigned char>(c);
        if (std::isdigit(u) || c == '.' || c == ':' || c == '_' || c == '-') trigger = true;
        if (std::isalnum(u)) alnum = true;
    }
    return trigger && alnum;
}

}  // namespace

std::set<std::string> load_word_list(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open word list " + path);
    std::set<std::string> words;
    std::string line;
    while (std::getline(in, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        auto entry = text::to_lower(text::trim(line));
        if (!entry.empty()) words.insert(std::move(entry));
    }
    return words;
}

EntityTypeLexicon::EntityTypeLexicon(std::set<std::string> words) : words_(std::move(words)) {
    if (words_.empty()) throw std::invalid_argument("entity type lexicon is empty");
    for (const auto& w : words_) {
        if (w != text::to_lower(w) || text::trim(w).empty()) {
            throw std::invalid_argument("entity type entries must be lowercase: \"" + w + "\"");
        }
    }
}

EntityTypeLexicon EntityTypeLexicon::defaults() {
    return EntityTypeLexicon({"segment", "dataset", "schema", "audience"});
}

EntityTypeLexicon EntityTypeLexicon::from_file(const std::string& path) {
    return EntityTypeLexicon(load_word_list(path));
}

bool EntityTypeLexicon::mentioned_in(std::string_view text_in) const {
    const auto words = text::alnum_words(text_in);
    for (const auto& entry : words_) {
        const auto needle = text::alnum_words(entry);
        if (needle.empty() || needle.size() > words.size()) continue;
        auto it = std::search(words.begin(), words.end(), needle.begin(), needle.end());
        if (it != words.end()) return true;
    }
    return false;
}

const std::set<std::string>& default_common_words() {
    static const std::set<std::string> words{
        "pre-requisite", "prerequisite", "e-mail",     "co-worker",    "re-run",       "re-create",
        "check-in",      "log-in",       "sign-in",    "sign-up",      "opt-in",       "opt-out",
        "up-to-date",    "real-time",    "built-in",   "add-on",       "follow-up",    "long-term",
        "short-term",    "well-known",   "high-level", "low-level",    "end-to-end",   "one-time",
        "first-party",   "third-party",  "self-service", "drag-and-drop", "state-of-the-art",
        "how-to",        "set-up",       "look-up",    "year-to-date", "month-over-month",
        "week-over-week", "non-profit",  "multi-step", "step-by-step", "out-of-the-box",
        "day-to-day",    "in-app",       "on-premise", "read-only",    "time-based",   "user-defined",
        "cross-channel", "de-duplicate", "re-use",     "co-op",        "x-ray",        "t-shirt"};
    return words;
}

std::string remove_links(std::string_view s) {
    const auto tokens = tokenize(s);
    std::string out;
    std::size_t cursor = 0;  // next byte of `s` not yet copied
    bool dropped_leading = false;
    for (std::size_t t = 0; t < tokens.size(); ++t) {
        auto [start, end] = tokens[t];
        std::string_view token = s.substr(start, end - start);

        std::size_t lead = 0;
        while (lead < token.size() && kLeadingPunct.find(token[lead]) != std::string_view::npos) ++lead;
        if (!is_link(token.substr(lead))) {
            if (dropped_leading) {
                cursor = start;
                dropped_leading = false;
            }
            out.append(s.substr(cursor, end - cursor));
            cursor = end;
            continue;
        }
        std::size_t trail = token.size();
        while (trail > lead && kTrailingPunct.find(token[trail - 1]) != std::string_view::npos) --trail;

        std::string rest = std::string(token.substr(0, lead)) + std::string(token.substr(trail));
        if (out.empty() && cursor == 0) {
            // Link at the start: drop the whitespace that follows it instead.
            out.append(rest);
            dropped_leading = rest.empty();
        } else {
            out.append(rest);
        }
        cursor = end;
    }
    if (!dropped_leading) out.append(s.substr(cursor));
    return out;
}

namespace {

using Span = std::pair<std::size_t, std::size_t>;

// One masking pass: quoted spans plus trigger tokens, sorted.
std::vector<Span> find_spans(std::string_view s, const std::set<std::string>& common_words) {
    std::vector<Span> spans = find_quoted(s);
    const std::size_t quoted_count = spans.size();
    for (const auto& tok : tokenize(s)) {
        // A token overlapping a quoted span is left to the quote rule.
        bool overlaps = false;
        for (std::size_t k = 0; k < quoted_count; ++k) {
            if (tok.start < spans[k].second && spans[k].first < tok.end) overlaps = true;
        }
        if (overlaps) continue;

        std::size_t b = tok.start;
        std::size_t e = tok.end;
        while (b < e && kLeadingPunct.find(s[b]) != std::string_view::npos) ++b;
        while (e > b && kTrailingPunct.find(s[e - 1]) != std::string_view::npos) --e;
        std::string_view core = s.substr(b, e - b);
        if (!has_trigger(core)) continue;
        if (is_ordinal(core)) continue;
        if (is_alpha_hyphenated(core) && common_words.count(text::to_lower(core))) continue;
        spans.emplace_back(b, e);
    }
    std::sort(spans.begin(), spans.end());
    return spans;
}

std::string replace_spans(std::string_view s, const std::vector<Span>& spans) {
    std::string out;
    std::size_t cursor = 0;
    for (const auto& [start, end] : spans) {
        out.append(s.substr(cursor, start - cursor));
        out.append(kEntityToken);
        cursor = end;
    }
    out.append(s.substr(cursor));
    return out;
}

}  // namespace

MaskedQuery mask_entities(const Query& q, const std::set<std::string>& common_words) {
    const std::string cleaned = remove_links(q.text());
    const std::string_view s = cleaned;

    // Masking can expose new trigger tokens (a quoted span glued to a colon,
    // say), so passes repeat over the masked text until nothing changes.
    // Spans stay in cleaned-text offsets; each pass strictly reduces the
    // number of unmasked characters.
    std::vector<Span> spans = find_spans(s, common_words);
    std::string current = replace_spans(s, spans);
    for (;;) {
        const auto found = find_spans(current, common_words);
        if (found.empty()) break;
        // Entity k occupies [at[k], at[k] + token size) in `current`.
        std::vector<std::size_t> at;
        std::size_t shift = 0;
        for (const auto& [start, end] : spans) {
            at.push_back(start - shift);
            shift += (end - start);
            shift -= kEntityToken.size();
        }
        auto to_cleaned = [&](std::size_t pos, bool is_end) {
            std::ptrdiff_t delta = 0;
            for (std::size_t k = 0; k < spans.size(); ++k) {
                const std::size_t a = at[k], b = at[k] + kEntityToken.size();
                if (!is_end && pos >= a && pos < b) return spans[k].first;
                if (is_end && pos > a && pos <= b) return spans[k].second;
                if (pos >= b) {
                    delta += static_cast<std::ptrdiff_t>(spans[k].second - spans[k].first) -
                             static_cast<std::ptrdiff_t>(kEntityToken.size());
                }
            }
            return static_cast<std::size_t>(static_cast<std::ptrdiff_t>(pos) + delta);
        };
        std::vector<Span> merged;
        for (const auto& [a, b] : found) merged.emplace_back(to_cleaned(a, false), to_cleaned(b, true));
        for (const auto& old : spans) {
            const bool covered = std::any_of(merged.begin(), merged.end(), [&](const Span& m) {
                return old.first < m.second && m.first < old.second;
            });
            if (!covered) merged.push_back(old);
        }
        std::sort(merged.begin(), merged.end());
        spans = std::move(merged);
        current = replace_spans(s, spans);
    }

    MaskedQuery masked;
    masked.text = std::move(current);
    for (const auto& [start, end] : spans) {
        masked.spans.push_back({start, end, std::string(s.substr(start, end - start))});
    }
    masked.mask_count = masked.spans.size();
    return masked;
}

AmbiguityVerdict lexical_override(const Query& q, const MaskedQuery& masked, const AmbiguityVerdict& model_verdict,
                                  const EntityTypeLexicon& lexicon) {
    if (model_verdict.label == AmbiguityLabel::clear && masked.mask_count >= 1 && !lexicon.mentioned_in(q.text())) {
        return AmbiguityVerdict{AmbiguityLabel::ambiguous, AmbiguityType::lexical, model_verdict.score,
                                VerdictSource::lexical_override};
    }
    AmbiguityVerdict out = model_verdict;
    out.source = VerdictSource::model;
    return out;
}

}  // namespace qrouter
