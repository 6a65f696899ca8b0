#pragma once

// Service configuration. Secrets never live here: the config only names
// the environment variables that hold API tokens.

#include <optional>
#include <string>

#include "qrouter/embed.hpp"
#include "qrouter/rewrite.hpp"

namespace qrouter {

struct ServiceConfig {
    EmbedderSpec embedder;                // kind/dim/identity; must match the checkpoint
    RemoteEmbedderConfig remote_embedder;  // used when embedder.kind == remote
    std::optional<LlmClientConfig> llm;   // absent: table-driven mock rewriter
    std::string mock_rewrites_path;       // optional table for the mock
    std::string rewrite_template_path;    // optional override of the default template
    std::string entity_types_path;        // optional; built-in defaults otherwise
    std::string common_words_path;        // optional; built-in defaults otherwise
    std::string checkpoint_path;
    std::optional<double> threshold;      // overrides the checkpoint threshold
    std::size_t history_window = kDefaultHistoryWindow;
    double request_timeout_seconds = 30.0;
    std::size_t max_in_flight_llm = 8;
    std::string bind_address = "127.0.0.1";
    int port = 8080;
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Parses a JSON config. Relative paths resolve against `base_dir`. Keys
/// that look like inline secrets ("token", "api_key", "password", ...) are
/// rejected.
ServiceConfig parse_service_config(const std::string& json_text, const std::string& base_dir = "");
ServiceConfig load_service_config(const std::string& path);

}  // namespace qrouter
