#pragma once

// Query rewriting behind a pluggable interface: prompt templating, an
// HTTP chat-completion client, a table-driven mock, and the LLM-judge
// ambiguity detector used as a baseline.

#include <chrono>
#include <cstddef>
#include <map>
#include <memory>
#include <semaphore>
#include <stdexcept>
#include <string>
#include <vector>

#include "qrouter/core.hpp"

namespace qrouter {

inline constexpr std::size_t kDefaultHistoryWindow = 5;

struct RewriteContext {
    std::vector<ChatTurn> history;
    std::vector<std::string> snippets;
};

struct RewriteResult {
    Query rewritten;
    std::string raw_response;
    double latency_ms = 0.0;
};

class RewriteError : public std::runtime_error {
public:
    RewriteError(const std::string& message, std::size_t attempts)
        : std::runtime_error(message), attempts_(attempts) {}
    std::size_t attempts() const noexcept { return attempts_; }

private:
    std::size_t attempts_;
};

class TemplateError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Text with `{{name}}` slots. Missing required slots are rejected when
/// the template is created, never at render time.
class PromptTemplate {
public:
    static PromptTemplate from_string(std::string body, std::vector<std::string> required_slots);
    static PromptTemplate from_file(const std::string& path, std::vector<std::string> required_slots);

    const std::string& body() const noexcept { return body_; }

    /// Replaces every `{{name}}` whose name is in `values`.
    std::string render(const std::map<std::string, std::string>& values) const;

private:
    explicit PromptTemplate(std::string body) : body_(std::move(body)) {}
    std::string body_;
};

/// Slots: {{snippets}}, {{history}}, {{query}}.
PromptTemplate default_rewrite_template();
PromptTemplate load_rewrite_template(const std::string& path);

/// Renders snippets, the last `window` turns and the query into `tmpl`.
std::string build_rewrite_prompt(const Query& q, const RewriteContext& ctx,
                                 const PromptTemplate& tmpl = default_rewrite_template(),
                                 std::size_t window = kDefaultHistoryWindow);

class Rewriter {
public:
    virtual ~Rewriter() = default;

    /// Throws RewriteError when no rewrite could be produced.
    virtual RewriteResult rewrite(const Query& q, const RewriteContext& ctx) const = 0;
};

/// Looks the query text up in a table; unmapped queries are echoed.
class MockRewriter final : public Rewriter {
public:
    explicit MockRewriter(std::map<std::string, std::string> table = {}) : table_(std::move(table)) {}

    /// JSON object file {"query": "rewrite", ...}.
    static MockRewriter from_file(const std::string& path);

    RewriteResult rewrite(const Query& q, const RewriteContext& ctx) const override;

private:
    std::map<std::string, std::string> table_;
};

class LlmError : public std::runtime_error {
public:
    LlmError(const std::string& message, bool retryable, std::size_t attempts = 1)
        : std::runtime_error(message), retryable_(retryable), attempts_(attempts) {}
    bool retryable() const noexcept { return retryable_; }
    std::size_t attempts() const noexcept { return attempts_; }

private:
    bool retryable_;
    std::size_t attempts_;
};

class LlmClient {
public:
    virtual ~LlmClient() = default;
    /// Sends a single user message; returns the assistant text.
    virtual std::string complete(const std::string& prompt) const = 0;
};

struct LlmClientConfig {
    std::string url;  // chat-completions endpoint, e.g. http://host:port/v1/chat/completions
    std::string model;
    std::string token_env;  // environment variable holding the bearer token
    double temperature = 0.0;
    double timeout_seconds = 30.0;
    std::size_t max_retries = 2;  // retries after the first attempt
    std::chrono::milliseconds initial_backoff{200};
    std::size_t max_in_flight = 8;
    bool debug = false;  // log request and response bodies to stderr
};

/// OpenAI-style chat completion over HTTP with bounded retries and
/// exponential backoff on retryable failures (transport errors, 408, 429, 5xx).
class HttpLlmClient final : public LlmClient {
public:
    explicit HttpLlmClient(LlmClientConfig config);

    std::string complete(const std::string& prompt) const override;

    const LlmClientConfig& config() const noexcept { return config_; }

private:
    std::string attempt(const std::string& body) const;

    LlmClientConfig config_;
    mutable std::counting_semaphore<1024> in_flight_;
};

class LlmRewriter final : public Rewriter {
public:
    LlmRewriter(std::shared_ptr<const LlmClient> client, PromptTemplate tmpl = default_rewrite_template(),
                std::size_t window = kDefaultHistoryWindow);

    RewriteResult rewrite(const Query& q, const RewriteContext& ctx) const override;

private:
    std::shared_ptr<const LlmClient> client_;
    PromptTemplate template_;
    std::size_t window_;
};

class DetectionParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Slot: {{query}}.
PromptTemplate default_detection_template();
std::string build_detection_prompt(const Query& q, const PromptTemplate& tmpl = default_detection_template());

/// First `RESPONSE: CLEAR` / `RESPONSE: VAGUE` (case-insensitive) wins.
AmbiguityLabel parse_detection_response(const std::string& response);

/// LLM-judge baseline detector.
AmbiguityLabel llm_detect(const LlmClient& client, const Query& q,
                          const PromptTemplate& tmpl = default_detection_template());

}  // namespace qrouter
