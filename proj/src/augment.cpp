#include "qrouter/augment.hpp"

#include <cctype>
#include <regex>
#include <unordered_set>

#include "qrouter/features.hpp"
#include "qrouter/text.hpp"

namespace qrouter {
namespace {

constexpr std::size_t kShortQueryWords = 7;

std::string capitalize_first(std::string s) {
    if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
    return s;
}

bool is_capitalized(std::string_view s) {
    return !s.empty() && std::isupper(static_cast<unsigned char>(s[0]));
}

// Splits a token into leading punctuation, core and trailing punctuation.
struct TokenParts {
    std::string lead, core, trail;
};

TokenParts split_token(const std::string& token) {
    std::size_t b = 0, e = token.size();
    while (b < e && text::is_ascii_punct(token[b])) ++b;
    while (e > b && text::is_ascii_punct(token[e - 1])) --e;
    return {token.substr(0, b), token.substr(b, e - b), token.substr(e)};
}

void push_unique(std::vector<Query>& out, std::unordered_set<std::string>& seen, const Query& source,
                 std::string candidate) {
    if (text::trim(candidate).empty() || candidate == source.text()) return;
    if (seen.insert(candidate).second) out.emplace_back(std::move(candidate));
}

}  // namespace

std::string_view to_string(AugmentRule rule) {
    switch (rule) {
        case AugmentRule::omit_details: return "omit_details";
        case AugmentRule::add_referential: return "add_referential";
        case AugmentRule::vague_statement: return "vague_statement";
        case AugmentRule::remove_entity_type: return "remove_entity_type";
    }
    return "omit_details";
}

std::optional<Query> omit_details(const Query& q) {
    static const std::regex pattern(R"(\bthe\s+(\w+)\s+of\b)", std::regex::icase);
    const std::string& s = q.text();
    std::smatch m;
    if (!std::regex_search(s, m, pattern)) return std::nullopt;
    const auto of_pos = static_cast<std::size_t>(m.position(0) + m.length(0)) - 2;
    std::string kept(text::trim(std::string_view(s).substr(0, of_pos)));
    if (!text::trim(s).empty() && text::trim(s).back() == '?') kept.push_back('?');
    if (text::trim(kept).empty() || kept == s) return std::nullopt;
    return Query(std::move(kept));
}

std::vector<Query> add_referential(const Query& q, Rng& rng, std::size_t repetitions, const AugmentLexicons& lex) {
    auto tokens = text::split_whitespace(q.text());
    std::vector<std::size_t> positions;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (text::to_lower(split_token(tokens[i]).core) == "the") positions.push_back(i);
    }
    if (positions.empty() || lex.referential_words.empty()) return {};

    std::uniform_int_distribution<std::size_t> pick_pos(0, positions.size() - 1);
    std::uniform_int_distribution<std::size_t> pick_word(0, lex.referential_words.size() - 1);
    std::vector<Query> out;
    std::unordered_set<std::string> seen;
    for (std::size_t r = 0; r < repetitions; ++r) {
        const std::size_t at = positions[pick_pos(rng)];
        const std::string& word = lex.referential_words[pick_word(rng)];
        auto parts = split_token(tokens[at]);
        auto copy = tokens;
        copy[at] = parts.lead + (is_capitalized(parts.core) ? capitalize_first(word) : word) + parts.trail;
        push_unique(out, seen, q, text::join(copy, " "));
    }
    return out;
}

std::vector<Query> vague_statement(const Query& q, Rng& rng, std::size_t repetitions, const AugmentLexicons& lex) {
    if (q.text().find('?') != std::string::npos) return {};
    auto tokens = text::split_whitespace(q.text());
    if (tokens.size() < 2 || lex.vague_phrases.empty()) return {};
    if (!lex.imperative_verbs.count(text::to_lower(text::strip_punct(tokens[0])))) return {};
    if (!lex.pronouns.count(text::to_lower(text::strip_punct(tokens[1])))) return {};

    std::size_t rest_start = 2;
    if (tokens.size() > 2 && lex.connectors.count(text::to_lower(tokens[2]))) rest_start = 3;
    const std::vector<std::string> rest(tokens.begin() + static_cast<std::ptrdiff_t>(rest_start), tokens.end());

    std::uniform_int_distribution<std::size_t> pick(0, lex.vague_phrases.size() - 1);
    std::vector<Query> out;
    std::unordered_set<std::string> seen;
    for (std::size_t r = 0; r < repetitions; ++r) {
        std::string s = capitalize_first(lex.vague_phrases[pick(rng)]);
        if (!rest.empty()) s += " " + text::join(rest, " ");
        push_unique(out, seen, q, std::move(s));
    }
    return out;
}

std::optional<Query> remove_entity_type(const Query& q, const LexicalRules& rules) {
    const MaskedQuery masked = mask_entities(q, rules.common_words);
    if (masked.mask_count == 0 || !rules.entity_types.mentioned_in(q.text())) return std::nullopt;

    // Tokenize the same link-stripped text the mask spans refer to.
    const std::string cleaned = remove_links(q.text());
    std::vector<std::string> kept;
    bool removed = false;
    std::size_t i = 0;
    while (i < cleaned.size()) {
        while (i < cleaned.size() && text::is_space(cleaned[i])) ++i;
        const std::size_t start = i;
        while (i < cleaned.size() && !text::is_space(cleaned[i])) ++i;
        if (i == start) break;
        std::string token = cleaned.substr(start, i - start);
        bool in_span = false;
        for (const auto& sp : masked.spans) {
            if (start < sp.end && sp.start < i) in_span = true;
        }
        auto parts = split_token(token);
        if (!in_span && rules.entity_types.words().count(text::to_lower(parts.core))) {
            removed = true;
            if (!parts.trail.empty() && !kept.empty()) kept.back() += parts.trail;
            continue;
        }
        kept.push_back(std::move(token));
    }
    if (!removed || kept.empty()) return std::nullopt;
    std::string out = text::join(kept, " ");
    if (out == q.text() || text::trim(out).empty()) return std::nullopt;
    return Query(std::move(out));
}

AugmentResult augment_corpus(const std::vector<DatasetRecord>& records, std::uint64_t seed,
                             const LexicalRules& rules, const AugmentLexicons& lex) {
    AugmentResult result;
    std::unordered_set<std::string> texts;
    std::unordered_set<std::string> ids;
    for (const auto& r : records) {
        texts.insert(r.query.text());
        ids.insert(r.id);
    }

    for (std::size_t index = 0; index < records.size(); ++index) {
        const DatasetRecord& source = records[index];
        if (source.label != AmbiguityLabel::clear) continue;

        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
        Rng rng(seq);
        std::size_t counter = 0;

        auto emit = [&](AugmentRule rule, const std::vector<Query>& candidates) {
            AugmentationReport report{rule, source.id, {}};
            for (const auto& c : candidates) {
                if (!texts.insert(c.text()).second) continue;
                std::string id;
                do {
                    id = source.id + "#" + std::string(to_string(rule)) + "-" + std::to_string(++counter);
                } while (!ids.insert(id).second);
                result.generated.push_back(
                    DatasetRecord{id, c, AmbiguityLabel::ambiguous, source.history, std::nullopt});
                report.generated.push_back(c);
                ++result.counts[rule];
            }
            if (!report.generated.empty()) result.reports.push_back(std::move(report));
        };

        std::vector<Query> referential;
        if (auto omitted = omit_details(source.query)) {
            emit(AugmentRule::omit_details, {*omitted});
            referential = add_referential(*omitted, rng, 5, lex);
        }
        if (query_length(source.query) <= kShortQueryWords) {
            for (auto& q : add_referential(source.query, rng, 5, lex)) referential.push_back(std::move(q));
        }
        emit(AugmentRule::add_referential, referential);
        emit(AugmentRule::vague_statement, vague_statement(source.query, rng, 5, lex));
        if (auto stripped = remove_entity_type(source.query, rules)) {
            emit(AugmentRule::remove_entity_type, {*stripped});
        }
    }
    return result;
}

json augment_report_to_json(const AugmentResult& result, std::uint64_t seed) {
    json counts = json::object();
    for (AugmentRule rule : {AugmentRule::omit_details, AugmentRule::add_referential, AugmentRule::vague_statement,
                             AugmentRule::remove_entity_type}) {
        auto it = result.counts.find(rule);
        counts[std::string(to_string(rule))] = it == result.counts.end() ? 0 : it->second;
    }
    json sources = json::array();
    for (const auto& rep : result.reports) {
        json gen = json::array();
        for (const auto& q : rep.generated) gen.push_back(q.text());
        sources.push_back({{"rule", to_string(rep.rule)}, {"source_id", rep.source_id}, {"generated", gen}});
    }
    return json{{"seed", seed}, {"total", result.generated.size()}, {"counts", counts}, {"sources", sources}};
}

}  // namespace qrouter
