#include "qrouter/embed.hpp"

#include <httplib.h>

#include <cmath>
#include <nlohmann/json.hpp>

#include "qrouter/http_util.hpp"
#include "qrouter/text.hpp"

namespace qrouter {
namespace {

constexpr std::uint64_t kFnvOffset = 1469598103934665603ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = kFnvOffset) {
    for (char c : bytes) {
        h ^= static_cast<unsigned char>(c);
        h *= kFnvPrime;
    }
    return h;
}

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Releases one in-flight slot on scope exit.
class SlotGuard {
public:
    explicit SlotGuard(std::counting_semaphore<1024>& sem) : sem_(sem) { sem_.acquire(); }
    ~SlotGuard() { sem_.release(); }
    SlotGuard(const SlotGuard&) = delete;
    SlotGuard& operator=(const SlotGuard&) = delete;

private:
    std::counting_semaphore<1024>& sem_;
};

}  // namespace

std::string_view to_string(EmbedderKind kind) {
    return kind == EmbedderKind::hashing ? "hashing" : "remote";
}

EmbedderKind embedder_kind_from_string(std::string_view s) {
    if (s == "hashing") return EmbedderKind::hashing;
    if (s == "remote") return EmbedderKind::remote;
    throw std::invalid_argument("unknown embedder kind \"" + std::string(s) + "\"");
}

void l2_normalize(std::vector<double>& v) {
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    if (norm == 0.0) return;
    for (double& x : v) x /= norm;
}

std::vector<Embedding> Embedder::embed_batch(const std::vector<std::string>& texts) const {
    std::vector<Embedding> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(embed(t));
    return out;
}

HashingEmbedder::HashingEmbedder(std::size_t dim, std::string seed_tag)
    : spec_{EmbedderKind::hashing, dim, std::move(seed_tag)}, seed_(fnv1a(spec_.identity)) {
    if (dim == 0) throw std::invalid_argument("embedding dimension must be positive");
}

Embedding HashingEmbedder::embed(std::string_view input) const {
    if (text::trim(input).empty()) throw EmbedError(EmbedError::Kind::fatal, "cannot embed empty text");
    const std::string padded = " " + text::to_lower(input) + " ";
    Embedding e{std::vector<double>(spec_.dim, 0.0)};
    for (std::size_t i = 0; i + 3 <= padded.size(); ++i) {
        std::uint64_t h = mix64(fnv1a(std::string_view(padded).substr(i, 3), seed_));
        double sign = (h >> 63) ? -1.0 : 1.0;
        e.values[h % spec_.dim] += sign;
    }
    double norm = 0.0;
    for (double x : e.values) norm += x * x;
    if (norm == 0.0) {
        // Every trigram cancelled out; fall back to a single whole-text bucket.
        e.values[mix64(fnv1a(padded, seed_)) % spec_.dim] = 1.0;
    }
    l2_normalize(e.values);
    return e;
}

RemoteEmbedder::RemoteEmbedder(RemoteEmbedderConfig config)
    : config_(std::move(config)),
      spec_{EmbedderKind::remote, config_.dim, config_.model_name},
      in_flight_(static_cast<std::ptrdiff_t>(std::clamp<std::size_t>(config_.max_in_flight, 1, 1024))) {
    if (config_.dim == 0) throw std::invalid_argument("embedding dimension must be positive");
    split_url(config_.url);
}

RemoteEmbedder::~RemoteEmbedder() = default;

Embedding RemoteEmbedder::embed(std::string_view text) const {
    auto batch = embed_batch({std::string(text)});
    return std::move(batch.front());
}

std::vector<Embedding> RemoteEmbedder::embed_batch(const std::vector<std::string>& texts) const {
    if (texts.empty()) return {};
    SlotGuard slot(in_flight_);

    auto [base, path] = split_url(config_.url);
    httplib::Client client(base);
    auto secs = static_cast<time_t>(config_.timeout_seconds);
    auto usecs = static_cast<time_t>((config_.timeout_seconds - static_cast<double>(secs)) * 1e6);
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    client.set_write_timeout(secs, usecs);

    httplib::Headers headers;
    if (auto token = env_or_empty(config_.token_env); !token.empty()) {
        headers.emplace("Authorization", "Bearer " + token);
    }
    nlohmann::json body{{"texts", texts}};
    auto res = client.Post(path, headers, body.dump(), "application/json");
    if (!res) {
        throw EmbedError(EmbedError::Kind::retryable,
                         "embedding request failed: " + httplib::to_string(res.error()));
    }
    if (res->status >= 500 || res->status == 429 || res->status == 408) {
        throw EmbedError(EmbedError::Kind::retryable, "embedding service status " + std::to_string(res->status));
    }
    if (res->status < 200 || res->status >= 300) {
        throw EmbedError(EmbedError::Kind::fatal, "embedding service status " + std::to_string(res->status));
    }

    nlohmann::json parsed;
    try {
        parsed = nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::parse_error& e) {
        throw EmbedError(EmbedError::Kind::fatal, std::string("malformed embedding response: ") + e.what());
    }
    if (!parsed.contains("vectors") || !parsed["vectors"].is_array() || parsed["vectors"].size() != texts.size()) {
        throw EmbedError(EmbedError::Kind::fatal, "embedding response has wrong vector count");
    }
    std::vector<Embedding> out;
    out.reserve(texts.size());
    for (const auto& v : parsed["vectors"]) {
        if (!v.is_array()) throw EmbedError(EmbedError::Kind::fatal, "embedding vector is not an array");
        if (v.size() != spec_.dim) {
            throw EmbedError(EmbedError::Kind::fatal, "embedding dimension mismatch: expected " +
                                                          std::to_string(spec_.dim) + ", got " +
                                                          std::to_string(v.size()));
        }
        Embedding e;
        e.values.reserve(v.size());
        for (const auto& x : v) {
            if (!x.is_number()) throw EmbedError(EmbedError::Kind::fatal, "embedding value is not a number");
            e.values.push_back(x.get<double>());
        }
        l2_normalize(e.values);
        out.push_back(std::move(e));
    }
    return out;
}

std::unique_ptr<Embedder> make_embedder(const EmbedderSpec& spec, const RemoteEmbedderConfig* remote) {
    if (spec.kind == EmbedderKind::hashing) return std::make_unique<HashingEmbedder>(spec.dim, spec.identity);
    if (!remote) throw std::invalid_argument("remote embedder requires endpoint configuration");
    RemoteEmbedderConfig cfg = *remote;
    cfg.dim = spec.dim;
    cfg.model_name = spec.identity;
    return std::make_unique<RemoteEmbedder>(std::move(cfg));
}

double cosine(const Embedding& a, const Embedding& b) {
    if (a.dim() != b.dim()) {
        throw std::invalid_argument("cosine: dimension mismatch (" + std::to_string(a.dim()) + " vs " +
                                    std::to_string(b.dim()) + ")");
    }
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.dim(); ++i) {
        dot += a.values[i] * b.values[i];
        na += a.values[i] * a.values[i];
        nb += b.values[i] * b.values[i];
    }
    if (na == 0.0 || nb == 0.0) throw std::invalid_argument("cosine: zero vector");
    double c = dot / (std::sqrt(na) * std::sqrt(nb));
    return std::clamp(c, -1.0, 1.0);
}

}  // namespace qrouter
