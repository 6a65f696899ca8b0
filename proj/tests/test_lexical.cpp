#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "qrouter/lexical.hpp"
#include "qrouter/text.hpp"
#include "support.hpp"

using namespace qrouter;

namespace {

std::set<std::string> oracle_common_words() {
    return {"pre-requisite", "e-mail", "opt-in", "follow-up", "real-time", "end-to-end", "sign-up"};
}

}  // namespace

TEST(MaskEntities, FixtureFile) {
    const auto cases = qtest::load_jsonl(qtest::fixture_path("masking.jsonl"));
    ASSERT_GE(cases.size(), 20u);
    const auto common = oracle_common_words();
    for (const auto& c : cases) {
        const auto in = c["input"].get<std::string>();
        const auto masked = mask_entities(Query(in), common);
        EXPECT_EQ(masked.text, c["expected"].get<std::string>()) << in;
        EXPECT_EQ(masked.mask_count, c["mask_count"].get<std::size_t>()) << in;
        EXPECT_EQ(masked.spans.size(), masked.mask_count);
        if (!text::trim(masked.text).empty()) {
            const auto again = mask_entities(Query(masked.text), common);
            EXPECT_EQ(again.text, masked.text) << "not idempotent: " << in;
        }
    }
}

TEST(MaskEntities, WorkedExamples) {
    const auto& common = default_common_words();
    auto m = mask_entities(Query("What is the total size of 124abcde?"), common);
    EXPECT_EQ(m.text, "What is the total size of ENTITY?");
    EXPECT_EQ(m.mask_count, 1u);
    ASSERT_EQ(m.spans.size(), 1u);
    EXPECT_EQ(m.spans[0].original, "124abcde");

    m = mask_entities(Query("What is a segment?"), common);
    EXPECT_EQ(m.text, "What is a segment?");
    EXPECT_EQ(m.mask_count, 0u);

    m = mask_entities(Query("What is the id of 'ABC Dataset (created on)'?"), common);
    EXPECT_EQ(m.text, "What is the id of ENTITY?");
    ASSERT_EQ(m.spans.size(), 1u);
    EXPECT_EQ(m.spans[0].original, "'ABC Dataset (created on)'");
}

TEST(MaskEntities, LinksAreDeletedNotMasked) {
    auto m = mask_entities(Query("See http://a.b/c?d=1 and www.x.y/z"), default_common_words());
    EXPECT_EQ(m.text, "See and");
    EXPECT_EQ(m.mask_count, 0u);
    EXPECT_EQ(m.text.find("ENTITY"), std::string::npos);
}

TEST(MaskEntities, SpanOffsetsPointIntoCleanedText) {
    const std::string q = "Check https://x.io then ds_1 and 'A B'";
    const auto cleaned = remove_links(q);
    const auto m = mask_entities(Query(q), default_common_words());
    ASSERT_EQ(m.spans.size(), 2u);
    for (const auto& sp : m.spans) EXPECT_EQ(cleaned.substr(sp.start, sp.end - sp.start), sp.original);
}

TEST(MaskEntities, ApostrophesInsideWordsAreNotQuotes) {
    auto m = mask_entities(Query("Why didn't the owner's job run?"), default_common_words());
    EXPECT_EQ(m.mask_count, 0u);
}

TEST(MaskEntities, IdempotentOnRandomStrings) {
    std::mt19937 rng(17);
    const std::string alphabet = "ab XYZ_-.:'\"019?()";
    for (int i = 0; i < 2000; ++i) {
        std::string s = "q";
        for (int k = rng() % 30; k > 0; --k) s.push_back(alphabet[rng() % alphabet.size()]);
        auto m = mask_entities(Query(s), default_common_words());
        EXPECT_EQ(m.spans.size(), m.mask_count);
        if (text::trim(m.text).empty()) continue;
        EXPECT_EQ(mask_entities(Query(m.text), default_common_words()).text, m.text) << s;
    }
}

TEST(LexicalOverride, Rules) {
    const EntityTypeLexicon lex({"segment", "dataset", "schema"});
    const AmbiguityVerdict clear{AmbiguityLabel::clear, AmbiguityType::unknown, 0.2, VerdictSource::model};
    const auto& common = default_common_words();

    Query q1("What is the total size of 124abcde?");
    auto v = lexical_override(q1, mask_entities(q1, common), clear, lex);
    EXPECT_EQ(v.label, AmbiguityLabel::ambiguous);
    EXPECT_EQ(v.ambiguity_type, AmbiguityType::lexical);
    EXPECT_EQ(v.source, VerdictSource::lexical_override);
    EXPECT_EQ(v.score, 0.2);

    Query q2("What is a segment?");
    v = lexical_override(q2, mask_entities(q2, common), clear, lex);
    EXPECT_EQ(v.label, AmbiguityLabel::clear);
    EXPECT_EQ(v.source, VerdictSource::model);

    Query q3("What is the id of 'ABC Dataset (created on)'?");
    v = lexical_override(q3, mask_entities(q3, common), clear, lex);
    EXPECT_EQ(v.label, AmbiguityLabel::clear);
}

TEST(LexicalOverride, NeverDowngradesAmbiguous) {
    const AmbiguityVerdict amb{AmbiguityLabel::ambiguous, AmbiguityType::unknown, 0.9, VerdictSource::model};
    for (const char* s : {"What is it?", "size of 124abcde", "the segment ds_1"}) {
        Query q(s);
        auto v = lexical_override(q, mask_entities(q, default_common_words()), amb, EntityTypeLexicon::defaults());
        EXPECT_EQ(v.label, AmbiguityLabel::ambiguous) << s;
        EXPECT_EQ(v.source, VerdictSource::model);
    }
}

TEST(EntityTypeLexicon, WholeWordMatching) {
    EntityTypeLexicon lex({"segment", "business event"});
    EXPECT_TRUE(lex.mentioned_in("Show the SEGMENT."));
    EXPECT_FALSE(lex.mentioned_in("Show the segments"));
    EXPECT_FALSE(lex.mentioned_in("subsegment ds_1"));
    EXPECT_TRUE(lex.mentioned_in("a Business  Event ds_2"));
    EXPECT_THROW(EntityTypeLexicon({}), std::invalid_argument);
    EXPECT_THROW(EntityTypeLexicon({"Segment"}), std::invalid_argument);
}

TEST(WordList, FileWithComments) {
    const auto path = std::filesystem::temp_directory_path() / "qrouter_words.txt";
    {
        std::ofstream out(path);
        out << "# business objects\nSegment\n\n  journey  # trailing comment\n";
    }
    auto words = load_word_list(path.string());
    EXPECT_EQ(words, (std::set<std::string>{"segment", "journey"}));
    EXPECT_TRUE(EntityTypeLexicon::from_file(path.string()).mentioned_in("the journey j-1"));
    std::filesystem::remove(path);
    EXPECT_THROW(load_word_list("/nonexistent/words.txt"), std::runtime_error);
}

TEST(WordList, ShippedAssetsLoad) {
    auto types = EntityTypeLexicon::from_file(std::string(QROUTER_ASSET_DIR) + "/entity_types.txt");
    EXPECT_EQ(types.words(), EntityTypeLexicon::defaults().words());
    auto common = load_word_list(std::string(QROUTER_ASSET_DIR) + "/common_words.txt");
    EXPECT_EQ(common, default_common_words());
}
