#include "qrouter/config.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "qrouter/json_io.hpp"
#include "qrouter/text.hpp"

namespace qrouter {
namespace {

bool looks_like_secret(const std::string& key) {
    const auto k = text::to_lower(key);
    if (k.size() >= 4 && k.substr(k.size() - 4) == "_env") return false;
    for (const char* bad : {"token", "api_key", "apikey", "password", "secret"}) {
        if (k.find(bad) != std::string::npos) return true;
    }
    return false;
}

void reject_secrets(const json& j, const std::string& where) {
    if (!j.is_object()) return;
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (looks_like_secret(it.key())) {
            throw ConfigError("config key \"" + where + it.key() +
                              "\" looks like an inline secret; name an environment variable with \"token_env\"");
        }
        reject_secrets(it.value(), where + it.key() + ".");
    }
}

std::string resolve(const std::string& base, const std::string& p) {
    if (p.empty() || base.empty() || std::filesystem::path(p).is_absolute()) return p;
    return (std::filesystem::path(base) / p).string();
}

template <typename T>
void read_opt(const json& j, const char* key, T& out) {
    if (j.contains(key) && !j[key].is_null()) out = j[key].get<T>();
}

}  // namespace

ServiceConfig parse_service_config(const std::string& json_text, const std::string& base_dir) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    reject_secrets(j, "");

    ServiceConfig c;
    try {
        if (j.contains("embedder")) {
            const auto& e = j["embedder"];
            std::string kind = "hashing";
            read_opt(e, "kind", kind);
            c.embedder.kind = embedder_kind_from_string(kind);
            read_opt(e, "dim", c.embedder.dim);
            c.embedder.identity = c.embedder.kind == EmbedderKind::hashing ? "hash3-v1" : "";
            read_opt(e, "identity", c.embedder.identity);
            read_opt(e, "url", c.remote_embedder.url);
            read_opt(e, "token_env", c.remote_embedder.token_env);
            read_opt(e, "timeout_seconds", c.remote_embedder.timeout_seconds);
            read_opt(e, "max_in_flight", c.remote_embedder.max_in_flight);
            c.remote_embedder.dim = c.embedder.dim;
            c.remote_embedder.model_name = c.embedder.identity;
            if (c.embedder.kind == EmbedderKind::remote && c.remote_embedder.url.empty()) {
                throw ConfigError("remote embedder requires \"url\"");
            }
        } else {
            c.embedder.identity = "hash3-v1";
        }
        read_opt(j, "max_in_flight_llm", c.max_in_flight_llm);
        read_opt(j, "request_timeout_seconds", c.request_timeout_seconds);
        if (j.contains("llm") && !j["llm"].is_null()) {
            const auto& l = j["llm"];
            LlmClientConfig llm;
            read_opt(l, "url", llm.url);
            read_opt(l, "model", llm.model);
            read_opt(l, "token_env", llm.token_env);
            read_opt(l, "temperature", llm.temperature);
            llm.timeout_seconds = c.request_timeout_seconds;
            read_opt(l, "timeout_seconds", llm.timeout_seconds);
            read_opt(l, "max_retries", llm.max_retries);
            std::int64_t backoff_ms = llm.initial_backoff.count();
            read_opt(l, "initial_backoff_ms", backoff_ms);
            llm.initial_backoff = std::chrono::milliseconds(backoff_ms);
            llm.max_in_flight = c.max_in_flight_llm;
            read_opt(l, "debug", llm.debug);
            if (llm.url.empty()) throw ConfigError("llm section requires \"url\"");
            c.llm = llm;
        }
        read_opt(j, "mock_rewrites_path", c.mock_rewrites_path);
        read_opt(j, "rewrite_template_path", c.rewrite_template_path);
        read_opt(j, "entity_types_path", c.entity_types_path);
        read_opt(j, "common_words_path", c.common_words_path);
        read_opt(j, "checkpoint_path", c.checkpoint_path);
        if (j.contains("threshold") && !j["threshold"].is_null()) c.threshold = j["threshold"].get<double>();
        read_opt(j, "history_window", c.history_window);
        read_opt(j, "bind_address", c.bind_address);
        read_opt(j, "port", c.port);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("invalid config value: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }

    if (c.checkpoint_path.empty()) throw ConfigError("config requires \"checkpoint_path\"");
    if (c.history_window == 0) throw ConfigError("history_window must be >= 1");
    if (c.threshold && !(*c.threshold > 0.0 && *c.threshold < 1.0)) throw ConfigError("threshold must be in (0, 1)");
    for (auto* p : {&c.mock_rewrites_path, &c.rewrite_template_path, &c.entity_types_path, &c.common_words_path,
                    &c.checkpoint_path}) {
        *p = resolve(base_dir, *p);
    }
    return c;
}

ServiceConfig load_service_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_service_config(ss.str(), std::filesystem::path(path).parent_path().string());
}

}  // namespace qrouter
