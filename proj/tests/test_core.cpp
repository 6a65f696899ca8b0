#include <gtest/gtest.h>

#include <sstream>

#include "qrouter/core.hpp"
#include "qrouter/json_io.hpp"

using namespace qrouter;

TEST(Query, RejectsBlankText) {
    EXPECT_THROW(Query(""), std::invalid_argument);
    EXPECT_THROW(Query("  \t\n"), std::invalid_argument);
    EXPECT_EQ(Query("  hi ").text(), "  hi ");
}

TEST(Enums, RoundTripThroughStrings) {
    for (auto l : {AmbiguityLabel::clear, AmbiguityLabel::ambiguous}) EXPECT_EQ(label_from_string(to_string(l)), l);
    for (auto t : {AmbiguityType::pragmatic, AmbiguityType::syntactic, AmbiguityType::lexical, AmbiguityType::unknown}) {
        EXPECT_EQ(type_from_string(to_string(t)), t);
    }
    for (auto s : {VerdictSource::model, VerdictSource::lexical_override}) EXPECT_EQ(source_from_string(to_string(s)), s);
    for (auto r : {Role::user, Role::assistant}) EXPECT_EQ(role_from_string(to_string(r)), r);
}

TEST(ParseDataset, WellFormedLine) {
    std::istringstream in(R"({"id":"q1","query":"What is a segment?","label":"clear"})");
    auto recs = parse_dataset(in);
    ASSERT_EQ(recs.size(), 1u);
    EXPECT_EQ(recs[0].id, "q1");
    EXPECT_EQ(recs[0].label, AmbiguityLabel::clear);
    EXPECT_TRUE(recs[0].history.empty());
    EXPECT_FALSE(recs[0].golden_rewrite);
}

TEST(ParseDataset, UnknownLabelIsReportedWithLine) {
    std::istringstream in("{\"id\":\"a\",\"query\":\"x\"}\n{\"id\":\"b\",\"query\":\"y\",\"label\":\"maybe\"}\n");
    try {
        parse_dataset(in);
        FAIL() << "expected DatasetError";
    } catch (const DatasetError& e) {
        EXPECT_EQ(e.line(), 2u);
        EXPECT_NE(std::string(e.what()).find("unknown label"), std::string::npos);
    }
}

TEST(ParseDataset, DuplicateIdRejected) {
    std::istringstream in("{\"id\":\"q1\",\"query\":\"x\"}\n{\"id\":\"q1\",\"query\":\"y\"}\n");
    try {
        parse_dataset(in);
        FAIL() << "expected DatasetError";
    } catch (const DatasetError& e) {
        EXPECT_EQ(e.line(), 2u);
        EXPECT_NE(std::string(e.what()).find("duplicate id"), std::string::npos);
    }
}

TEST(ParseDataset, MalformedAndEmptyQuery) {
    std::istringstream bad("{\"id\":\"q1\",\"query\":");
    EXPECT_THROW(parse_dataset(bad), DatasetError);
    std::istringstream empty("{\"id\":\"q1\",\"query\":\"   \"}");
    EXPECT_THROW(parse_dataset(empty), DatasetError);
    std::istringstream role("{\"id\":\"q1\",\"query\":\"x\",\"history\":[{\"role\":\"bot\",\"text\":\"hi\"}]}");
    EXPECT_THROW(parse_dataset(role), DatasetError);
}

TEST(ParseDataset, BlankLinesSkipped) {
    std::istringstream in("\n{\"id\":\"q1\",\"query\":\"x\"}\n\n   \n{\"id\":\"q2\",\"query\":\"y\"}\n");
    EXPECT_EQ(parse_dataset(in).size(), 2u);
}

TEST(ParseDataset, SerializeRoundTrip) {
    std::vector<DatasetRecord> recs{
        {"a", Query("What are its attributes?"), AmbiguityLabel::ambiguous,
         {{Role::user, "Show dataset 1234"}, {Role::assistant, "Dataset 1234 has 3 fields."}},
         std::string("What are the attributes of dataset 1234?")},
        {"b", Query("Unicode “quotes” and é"), std::nullopt, {}, std::nullopt},
        {"c", Query("What is a segment?"), AmbiguityLabel::clear, {}, std::nullopt},
    };
    std::ostringstream out;
    write_dataset(out, recs);
    std::istringstream in(out.str());
    EXPECT_EQ(parse_dataset(in), recs);
}

TEST(TruncateHistory, KeepsLastK) {
    Conversation conv{{}, Query("q")};
    for (int i = 0; i < 7; ++i) conv.turns.push_back({i % 2 ? Role::assistant : Role::user, "t" + std::to_string(i)});
    auto t = truncate_history(conv, 5);
    ASSERT_EQ(t.turns.size(), 5u);
    EXPECT_EQ(t.turns.front().text, "t2");
    EXPECT_EQ(t.turns.back().text, "t6");
    EXPECT_EQ(t.current, conv.current);

    conv.turns.resize(3);
    EXPECT_EQ(truncate_history(conv, 5).turns.size(), 3u);
    conv.turns.clear();
    EXPECT_TRUE(truncate_history(conv, 5).turns.empty());
    EXPECT_THROW(truncate_history(conv, 0), std::invalid_argument);
}
