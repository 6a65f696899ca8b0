#pragma once

// Rule-based synthesis of ambiguous training queries from clear ones.

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "qrouter/classifier.hpp"
#include "qrouter/core.hpp"
#include "qrouter/json_io.hpp"
#include "qrouter/lexical.hpp"

namespace qrouter {

enum class AugmentRule { omit_details, add_referential, vague_statement, remove_entity_type };

std::string_view to_string(AugmentRule rule);

/// Word lists that stand in for part-of-speech information.
struct AugmentLexicons {
    std::set<std::string> imperative_verbs{"tell", "show", "give", "list", "explain",
                                           "describe", "find", "get", "create", "delete"};
    std::set<std::string> pronouns{"me", "us", "them", "it"};
    /// A preposition directly after the verb-pronoun pair goes with them
    /// ("Tell me about X" -> "<phrase> X").
    std::set<std::string> connectors{"about", "regarding"};
    std::vector<std::string> referential_words{"this", "that", "those",   "it",  "its",     "some",
                                               "others", "another", "other", "above", "previous"};
    std::vector<std::string> vague_phrases{"there is",     "there are",         "there is no such",
                                           "there is no",  "there are no such", "there are no",
                                           "there is not any", "it is",         "it is not",
                                           "this is not",  "this is",           "that is",
                                           "that is not"};
};

struct AugmentationReport {
    AugmentRule rule;
    std::string source_id;
    std::vector<Query> generated;
};

/// Cuts a "the <word> of" query right before "of"; keeps a trailing '?'.
std::optional<Query> omit_details(const Query& q);

/// Each repetition replaces one random "the" with a random referential
/// word. Results are deduplicated in first-seen order.
std::vector<Query> add_referential(const Query& q, Rng& rng, std::size_t repetitions = 5,
                                   const AugmentLexicons& lex = {});

/// For non-questions starting with an imperative verb followed by a
/// pronoun, replaces that pair with a random vague phrase.
std::vector<Query> vague_statement(const Query& q, Rng& rng, std::size_t repetitions = 5,
                                   const AugmentLexicons& lex = {});

/// Deletes entity-type words from a query that also has masked entities,
/// leaving the entity without its type.
std::optional<Query> remove_entity_type(const Query& q, const LexicalRules& rules);

struct AugmentResult {
    std::vector<DatasetRecord> generated;  // all labeled ambiguous
    std::vector<AugmentationReport> reports;
    std::map<AugmentRule, std::size_t> counts;
};

/// Applies the rules to every clear record in a fixed order (omit details,
/// referential insertion on its output and on short queries, vague
/// statements, entity-type removal). Outputs already present in the corpus
/// or generated earlier are dropped. Deterministic in `seed`.
AugmentResult augment_corpus(const std::vector<DatasetRecord>& records, std::uint64_t seed,
                             const LexicalRules& rules = {}, const AugmentLexicons& lex = {});

json augment_report_to_json(const AugmentResult& result, std::uint64_t seed);

}  // namespace qrouter
