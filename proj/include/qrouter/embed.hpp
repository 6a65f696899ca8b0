#pragma once

// Sentence-embedding providers. The classifier consumes embeddings through
// the Embedder interface; two implementations ship: a dependency-free
// character-trigram hashing embedder and a JSON-over-HTTP client.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <semaphore>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace qrouter {

struct Embedding {
    std::vector<double> values;

    std::size_t dim() const noexcept { return values.size(); }
};

enum class EmbedderKind { hashing, remote };

std::string_view to_string(EmbedderKind kind);
EmbedderKind embedder_kind_from_string(std::string_view s);

struct EmbedderSpec {
    EmbedderKind kind = EmbedderKind::hashing;
    std::size_t dim = 768;
    std::string identity;

    friend bool operator==(const EmbedderSpec&, const EmbedderSpec&) = default;
};

class EmbedError : public std::runtime_error {
public:
    enum class Kind {
        retryable,  // timeout, connection failure, 5xx
        fatal,      // dimension mismatch, malformed response, 4xx
    };

    EmbedError(Kind kind, const std::string& message) : std::runtime_error(message), kind_(kind) {}

    Kind kind() const noexcept { return kind_; }
    bool retryable() const noexcept { return kind_ == Kind::retryable; }

private:
    Kind kind_;
};

class Embedder {
public:
    virtual ~Embedder() = default;

    virtual const EmbedderSpec& spec() const = 0;

    /// Unit-norm embedding of `text`; deterministic per (identity, text).
    virtual Embedding embed(std::string_view text) const = 0;

    virtual std::vector<Embedding> embed_batch(const std::vector<std::string>& texts) const;
};

/// Signed feature hashing of character trigrams over the lowercased text
/// (padded with one space on each side), followed by L2 normalization.
class HashingEmbedder final : public Embedder {
public:
    explicit HashingEmbedder(std::size_t dim = 768, std::string seed_tag = "hash3-v1");

    const EmbedderSpec& spec() const override { return spec_; }
    Embedding embed(std::string_view text) const override;

private:
    EmbedderSpec spec_;
    std::uint64_t seed_;
};

struct RemoteEmbedderConfig {
    std::string url;         // e.g. http://127.0.0.1:8081/embed
    std::string model_name;  // becomes the embedder identity
    std::size_t dim = 768;
    std::string token_env;   // name of the environment variable holding the token
    double timeout_seconds = 10.0;
    std::size_t max_in_flight = 4;
};

/// POST {"texts": [...]} -> {"vectors": [[...]]}.
class RemoteEmbedder final : public Embedder {
public:
    explicit RemoteEmbedder(RemoteEmbedderConfig config);
    ~RemoteEmbedder() override;

    const EmbedderSpec& spec() const override { return spec_; }
    Embedding embed(std::string_view text) const override;
    std::vector<Embedding> embed_batch(const std::vector<std::string>& texts) const override;

private:
    RemoteEmbedderConfig config_;
    EmbedderSpec spec_;
    mutable std::counting_semaphore<1024> in_flight_;
};

std::unique_ptr<Embedder> make_embedder(const EmbedderSpec& spec, const RemoteEmbedderConfig* remote = nullptr);

/// Throws std::invalid_argument on dimension mismatch or zero vectors.
double cosine(const Embedding& a, const Embedding& b);

void l2_normalize(std::vector<double>& v);

}  // namespace qrouter
