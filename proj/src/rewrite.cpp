#include "qrouter/rewrite.hpp"

#include <httplib.h>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <thread>

#include "qrouter/http_util.hpp"
#include "qrouter/text.hpp"
#include "qrouter_prompts.hpp"

namespace qrouter {
namespace {

std::string strip_final_newline(std::string s) {
    if (!s.empty() && s.back() == '\n') s.pop_back();
    return s;
}

std::string slot(const std::string& name) {
    return "{{" + name + "}}";
}

std::string render_history(const std::vector<ChatTurn>& turns) {
    if (turns.empty()) return {};
    std::string out = "Chat history (oldest first):\n";
    for (const auto& t : turns) {
        out.append(to_string(t.role));
        out.append(": ");
        out.append(t.text);
        out.push_back('\n');
    }
    out.push_back('\n');
    return out;
}

std::string render_snippets(const std::vector<std::string>& snippets) {
    if (snippets.empty()) return {};
    std::string out = "Relevant passages:\n";
    for (const auto& s : snippets) {
        out.append("- ");
        out.append(s);
        out.push_back('\n');
    }
    out.push_back('\n');
    return out;
}

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

PromptTemplate PromptTemplate::from_string(std::string body, std::vector<std::string> required_slots) {
    for (const auto& name : required_slots) {
        if (body.find(slot(name)) == std::string::npos) {
            throw TemplateError("prompt template is missing required slot " + slot(name));
        }
    }
    return PromptTemplate(std::move(body));
}

PromptTemplate PromptTemplate::from_file(const std::string& path, std::vector<std::string> required_slots) {
    std::ifstream in(path);
    if (!in) throw TemplateError("cannot open prompt template " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_string(strip_final_newline(ss.str()), std::move(required_slots));
}

std::string PromptTemplate::render(const std::map<std::string, std::string>& values) const {
    std::string out;
    out.reserve(body_.size() + 256);
    std::size_t pos = 0;
    while (pos < body_.size()) {
        auto open = body_.find("{{", pos);
        if (open == std::string::npos) break;
        auto close = body_.find("}}", open + 2);
        if (close == std::string::npos) break;
        auto it = values.find(body_.substr(open + 2, close - open - 2));
        out.append(body_, pos, open - pos);
        if (it != values.end()) {
            out.append(it->second);
        } else {
            out.append(body_, open, close + 2 - open);
        }
        pos = close + 2;
    }
    out.append(body_, pos, std::string::npos);
    return out;
}

PromptTemplate default_rewrite_template() {
    return PromptTemplate::from_string(strip_final_newline(std::string(prompts::kRewrite)),
                                       {"snippets", "history", "query"});
}

PromptTemplate load_rewrite_template(const std::string& path) {
    return PromptTemplate::from_file(path, {"snippets", "history", "query"});
}

std::string build_rewrite_prompt(const Query& q, const RewriteContext& ctx, const PromptTemplate& tmpl,
                                 std::size_t window) {
    Conversation conv{ctx.history, q};
    const auto truncated = truncate_history(conv, window);
    return tmpl.render({{"snippets", render_snippets(ctx.snippets)},
                        {"history", render_history(truncated.turns)},
                        {"query", q.text()}});
}

MockRewriter MockRewriter::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open rewrite table " + path);
    auto j = nlohmann::json::parse(in);
    if (!j.is_object()) throw std::runtime_error("rewrite table must be a JSON object");
    std::map<std::string, std::string> table;
    for (auto it = j.begin(); it != j.end(); ++it) table.emplace(it.key(), it.value().get<std::string>());
    return MockRewriter(std::move(table));
}

RewriteResult MockRewriter::rewrite(const Query& q, const RewriteContext&) const {
    auto it = table_.find(q.text());
    const std::string& out = it == table_.end() ? q.text() : it->second;
    return RewriteResult{Query(out), out, 0.0};
}

HttpLlmClient::HttpLlmClient(LlmClientConfig config)
    : config_(std::move(config)),
      in_flight_(static_cast<std::ptrdiff_t>(std::clamp<std::size_t>(config_.max_in_flight, 1, 1024))) {
    split_url(config_.url);
}

std::string HttpLlmClient::attempt(const std::string& body) const {
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
    if (config_.debug) std::clog << "[llm] request " << body << '\n';
    auto res = client.Post(path, headers, body, "application/json");
    if (!res) throw LlmError("LLM request failed: " + httplib::to_string(res.error()), true);
    if (config_.debug) std::clog << "[llm] response " << res->status << ' ' << res->body << '\n';
    if (res->status == 408 || res->status == 429 || res->status >= 500) {
        throw LlmError("LLM service status " + std::to_string(res->status), true);
    }
    if (res->status < 200 || res->status >= 300) {
        throw LlmError("LLM service status " + std::to_string(res->status), false);
    }
    try {
        auto j = nlohmann::json::parse(res->body);
        return j.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw LlmError(std::string("malformed LLM response: ") + e.what(), false);
    }
}

std::string HttpLlmClient::complete(const std::string& prompt) const {
    nlohmann::json body{{"model", config_.model},
                        {"temperature", config_.temperature},
                        {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt}}})}};
    const std::string payload = body.dump();

    SlotGuard slot_guard(in_flight_);
    auto backoff = config_.initial_backoff;
    const std::size_t attempts = config_.max_retries + 1;
    for (std::size_t i = 1;; ++i) {
        try {
            return attempt(payload);
        } catch (const LlmError& e) {
            if (!e.retryable() || i >= attempts) throw LlmError(e.what(), e.retryable(), i);
        }
        std::this_thread::sleep_for(backoff);
        backoff *= 2;
    }
}

LlmRewriter::LlmRewriter(std::shared_ptr<const LlmClient> client, PromptTemplate tmpl, std::size_t window)
    : client_(std::move(client)), template_(std::move(tmpl)), window_(window) {
    if (!client_) throw std::invalid_argument("LlmRewriter requires a client");
    if (window_ == 0) throw std::invalid_argument("history window must be >= 1");
}

RewriteResult LlmRewriter::rewrite(const Query& q, const RewriteContext& ctx) const {
    const auto start = std::chrono::steady_clock::now();
    const std::string prompt = build_rewrite_prompt(q, ctx, template_, window_);
    std::string raw;
    try {
        raw = client_->complete(prompt);
    } catch (const LlmError& e) {
        throw RewriteError(e.what(), e.attempts());
    }
    std::string trimmed(text::trim(raw));
    if (trimmed.empty()) throw RewriteError("LLM returned an empty rewrite", 1);
    const double ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    return RewriteResult{Query(std::move(trimmed)), std::move(raw), ms};
}

PromptTemplate default_detection_template() {
    return PromptTemplate::from_string(strip_final_newline(std::string(prompts::kDetection)), {"query"});
}

std::string build_detection_prompt(const Query& q, const PromptTemplate& tmpl) {
    return tmpl.render({{"query", q.text()}});
}

AmbiguityLabel parse_detection_response(const std::string& response) {
    const std::string lower = text::to_lower(response);
    std::size_t pos = 0;
    while ((pos = lower.find("response:", pos)) != std::string::npos) {
        std::size_t i = pos + 9;
        while (i < lower.size() && (lower[i] == ' ' || lower[i] == '\t')) ++i;
        if (lower.compare(i, 5, "clear") == 0) return AmbiguityLabel::clear;
        if (lower.compare(i, 5, "vague") == 0) return AmbiguityLabel::ambiguous;
        pos = i;
    }
    throw DetectionParseError("detector response has no RESPONSE: CLEAR/VAGUE line");
}

AmbiguityLabel llm_detect(const LlmClient& client, const Query& q, const PromptTemplate& tmpl) {
    return parse_detection_response(client.complete(build_detection_prompt(q, tmpl)));
}

}  // namespace qrouter
