#include <gtest/gtest.h>

#include <filesystem>

#include "qrouter/checkpoint.hpp"
#include "support.hpp"

using namespace qrouter;

namespace {

ClassifierModel random_model(std::size_t dim = 32, std::uint64_t seed = 3) {
    Rng rng(seed);
    ClassifierModel m;
    m.head = HeadWeights::glorot(dim + kNumFeatures, 8, 0.1, rng);
    m.head.b1[0] = 0.125;
    m.head.b2 = {-0.3, 0.7};
    m.scaler.median = {7, 0, 3.25};
    m.scaler.iqr = {4, 1, 2.5};
    m.embedder = EmbedderSpec{EmbedderKind::hashing, dim, "hash3-v1"};
    m.threshold = 0.45;
    m.train_config.hidden = 8;
    m.train_config.seed = 77;
    return m;
}

CheckpointError::Kind load_error(const std::string& bytes) {
    try {
        load_checkpoint(bytes);
    } catch (const CheckpointError& e) {
        return e.kind();
    }
    ADD_FAILURE() << "load succeeded";
    return CheckpointError::Kind::io;
}

}  // namespace

TEST(Checkpoint, RoundTripIsBitExact) {
    const auto m = random_model();
    const auto bytes = save_checkpoint(m);
    const auto loaded = load_checkpoint(bytes);
    EXPECT_EQ(loaded.head, m.head);
    EXPECT_EQ(loaded.scaler, m.scaler);
    EXPECT_EQ(loaded.embedder, m.embedder);
    EXPECT_EQ(loaded.threshold, m.threshold);
    EXPECT_EQ(loaded.train_config, m.train_config);
    EXPECT_EQ(loaded.version, m.version);
    EXPECT_EQ(save_checkpoint(loaded), bytes);

    HashingEmbedder emb(32);
    for (const char* q : {"What is it?", "Show the schema of ds_1", "How many segments do I have?"}) {
        EXPECT_EQ(ambiguous_probability(m, emb, Query(q)), ambiguous_probability(loaded, emb, Query(q)));
    }
}

TEST(Checkpoint, FileRoundTrip) {
    const auto path = (std::filesystem::temp_directory_path() / "qrouter_ckpt.json").string();
    save_checkpoint_file(random_model(), path);
    EXPECT_EQ(load_checkpoint_file(path).head, random_model().head);
    std::filesystem::remove(path);
    EXPECT_EQ([&] {
        try {
            load_checkpoint_file(path);
        } catch (const CheckpointError& e) {
            return e.kind();
        }
        return CheckpointError::Kind::corrupt;
    }(), CheckpointError::Kind::io);
}

TEST(Checkpoint, FlippedPayloadByteIsRejected) {
    const auto bytes = save_checkpoint(random_model());
    // Flip a digit inside the weight data.
    auto pos = bytes.find("\"w1\"");
    pos = bytes.find_first_of("123456789", bytes.find("\"data\"", pos));
    auto corrupted = bytes;
    corrupted[pos] = corrupted[pos] == '9' ? '8' : static_cast<char>(corrupted[pos] + 1);
    EXPECT_EQ(load_error(corrupted), CheckpointError::Kind::checksum);

    auto threshold = bytes;
    auto tpos = threshold.find("\"threshold\":0.45");
    ASSERT_NE(tpos, std::string::npos);
    threshold.replace(tpos, 16, "\"threshold\":0.55");
    EXPECT_EQ(load_error(threshold), CheckpointError::Kind::checksum);
}

TEST(Checkpoint, StructuralErrors) {
    EXPECT_EQ(load_error("not json"), CheckpointError::Kind::corrupt);
    EXPECT_EQ(load_error(save_checkpoint(random_model()).substr(0, 100)), CheckpointError::Kind::corrupt);
    EXPECT_EQ(load_error("[1,2]"), CheckpointError::Kind::corrupt);

    auto doc = json::parse(save_checkpoint(random_model()));
    doc["format_version"] = "2";
    EXPECT_EQ(load_error(doc.dump()), CheckpointError::Kind::unsupported_version);

    doc = json::parse(save_checkpoint(random_model()));
    doc.erase("checksum");
    EXPECT_EQ(load_error(doc.dump()), CheckpointError::Kind::corrupt);

    // Consistent checksum over an inconsistent payload.
    doc = json::parse(save_checkpoint(random_model()));
    doc.erase("checksum");
    doc["embedder"]["dim"] = 64;
    doc["checksum"] = "sha256:" + sha256_hex(doc.dump());
    EXPECT_EQ(load_error(doc.dump()), CheckpointError::Kind::dimension);
}

TEST(Checkpoint, EmbedderCompatibility) {
    auto m = random_model(384);
    try {
        check_embedder_compatible(m, EmbedderSpec{EmbedderKind::hashing, 768, "hash3-v1"});
        FAIL();
    } catch (const CheckpointError& e) {
        EXPECT_EQ(e.kind(), CheckpointError::Kind::dimension);
    }
    try {
        check_embedder_compatible(m, EmbedderSpec{EmbedderKind::hashing, 384, "hash3-v2"});
        FAIL();
    } catch (const CheckpointError& e) {
        EXPECT_EQ(e.kind(), CheckpointError::Kind::embedder);
    }
    EXPECT_NO_THROW(check_embedder_compatible(m, EmbedderSpec{EmbedderKind::hashing, 384, "hash3-v1"}));
}

TEST(Sha256, KnownVector) {
    EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}
