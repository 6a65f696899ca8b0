#pragma once

// Rule-based masking of data entities (ids, file names, quoted names) and
// the lexical-ambiguity override applied on top of the model's verdict.

#include <cstddef>
#include <set>
#include <string>
#include <vector>

#include "qrouter/core.hpp"

namespace qrouter {

inline constexpr std::string_view kEntityToken = "ENTITY";

struct MaskSpan {
    std::size_t start = 0;  // byte offsets into the link-stripped text
    std::size_t end = 0;
    std::string original;

    friend bool operator==(const MaskSpan&, const MaskSpan&) = default;
};

struct MaskedQuery {
    std::string text;
    std::size_t mask_count = 0;
    std::vector<MaskSpan> spans;
};

/// Reads one entry per line; blank lines and `#` comments are ignored.
/// Entries are lowercased and trimmed.
std::set<std::string> load_word_list(const std::string& path);

/// Business-object words whose presence tells which kind of entity a masked
/// token refers to. Entries are lowercase words or space-joined phrases.
class EntityTypeLexicon {
public:
    explicit EntityTypeLexicon(std::set<std::string> words);

    static EntityTypeLexicon defaults();
    static EntityTypeLexicon from_file(const std::string& path);

    const std::set<std::string>& words() const noexcept { return words_; }

    /// Whole-word, case-insensitive search of any entry in `text`.
    bool mentioned_in(std::string_view text) const;

private:
    std::set<std::string> words_;
};

/// Built-in hyphenated English words exempt from masking.
const std::set<std::string>& default_common_words();

struct LexicalRules {
    EntityTypeLexicon entity_types = EntityTypeLexicon::defaults();
    std::set<std::string> common_words = default_common_words();
};

/// Removes http(s):// and www. links from the text. Whitespace that
/// separated a removed link from its neighbours is dropped.
std::string remove_links(std::string_view text);

MaskedQuery mask_entities(const Query& q, const std::set<std::string>& common_words);

/// Escalates a clear model verdict to ambiguous/lexical when the query had
/// at least one masked entity but names none of the entity types. Never
/// turns an ambiguous verdict into a clear one.
AmbiguityVerdict lexical_override(const Query& q, const MaskedQuery& masked, const AmbiguityVerdict& model_verdict,
                                  const EntityTypeLexicon& lexicon);

}  // namespace qrouter
