#include "qrouter/service.hpp"

#include <httplib.h>

#include <chrono>
#include <iostream>
#include <thread>
#include <variant>

#include "qrouter/checkpoint.hpp"
#include "qrouter/features.hpp"
#include "qrouter/lexical.hpp"

namespace qrouter {
namespace {

HttpReply error_reply(int status, const std::string& message) {
    return HttpReply{status, json{{"error", message}}};
}

struct ParsedRequest {
    Query query;
    std::vector<ChatTurn> history;
    FrameworkMode mode = FrameworkMode::guided;
    std::vector<std::string> snippets;
};

// Returns the parsed request, or a 400 reply describing the problem.
std::variant<ParsedRequest, HttpReply> parse_request(const std::string& body, bool with_mode) {
    json j;
    try {
        j = json::parse(body);
    } catch (const json::parse_error&) {
        return error_reply(400, "request body is not valid JSON");
    }
    if (!j.is_object()) return error_reply(400, "request body must be a JSON object");
    if (!j.contains("query") || !j["query"].is_string()) return error_reply(400, "missing string field \"query\"");
    std::optional<Query> query;
    try {
        query.emplace(j["query"].get<std::string>());
    } catch (const std::invalid_argument&) {
        return error_reply(400, "query text is empty");
    }
    ParsedRequest req{*query, {}, FrameworkMode::guided, {}};
    try {
        if (j.contains("history") && !j["history"].is_null()) req.history = history_from_json(j["history"]);
        if (with_mode && j.contains("mode") && !j["mode"].is_null()) {
            if (!j["mode"].is_string()) return error_reply(400, "\"mode\" must be a string");
            req.mode = mode_from_string(j["mode"].get<std::string>());
        }
        if (with_mode && j.contains("snippets") && !j["snippets"].is_null()) {
            if (!j["snippets"].is_array()) return error_reply(400, "\"snippets\" must be an array of strings");
            for (const auto& s : j["snippets"]) {
                if (!s.is_string()) return error_reply(400, "\"snippets\" must be an array of strings");
                req.snippets.push_back(s.get<std::string>());
            }
        }
    } catch (const std::invalid_argument& e) {
        return error_reply(400, e.what());
    } catch (const json::exception& e) {
        return error_reply(400, e.what());
    }
    return req;
}

}  // namespace

ServiceComponents load_components(const ServiceConfig& config) {
    auto model = std::make_shared<ClassifierModel>(load_checkpoint_file(config.checkpoint_path));
    check_embedder_compatible(*model, config.embedder);
    if (config.threshold) model->threshold = *config.threshold;

    std::shared_ptr<const Embedder> embedder = make_embedder(config.embedder, &config.remote_embedder);

    LexicalRules rules;
    if (!config.entity_types_path.empty()) rules.entity_types = EntityTypeLexicon::from_file(config.entity_types_path);
    if (!config.common_words_path.empty()) rules.common_words = load_word_list(config.common_words_path);

    ServiceComponents c;
    c.history_window = config.history_window;
    c.detector = std::make_shared<ModelDetector>(model, embedder, std::move(rules));
    if (config.llm) {
        auto tmpl = config.rewrite_template_path.empty() ? default_rewrite_template()
                                                         : load_rewrite_template(config.rewrite_template_path);
        c.rewriter = std::make_shared<LlmRewriter>(std::make_shared<HttpLlmClient>(*config.llm), std::move(tmpl),
                                                   config.history_window);
    } else if (!config.mock_rewrites_path.empty()) {
        c.rewriter = std::make_shared<MockRewriter>(MockRewriter::from_file(config.mock_rewrites_path));
    } else {
        c.rewriter = std::make_shared<MockRewriter>();
    }
    return c;
}

Service::Service() = default;
Service::~Service() = default;

void Service::set_components(ServiceComponents components) {
    auto shared = std::make_shared<const ServiceComponents>(std::move(components));
    {
        std::lock_guard lock(mutex_);
        components_ = std::move(shared);
    }
    ready_.store(true);
}

std::shared_ptr<const ServiceComponents> Service::snapshot() const {
    std::lock_guard lock(mutex_);
    return components_;
}

HttpReply Service::healthz() const {
    auto c = snapshot();
    if (!ready_.load() || !c) return HttpReply{503, json{{"status", "loading"}, {"model_version", nullptr}}};
    return HttpReply{200, json{{"status", "ok"}, {"model_version", c->detector->model().version}}};
}

HttpReply Service::classify(const std::string& body) const {
    auto c = snapshot();
    if (!ready_.load() || !c) return error_reply(503, "model is still loading");
    auto parsed = parse_request(body, false);
    if (auto* reply = std::get_if<HttpReply>(&parsed)) return *reply;
    const auto& req = std::get<ParsedRequest>(parsed);

    AmbiguityVerdict verdict;
    try {
        verdict = c->detector->detect(req.query);
    } catch (const EmbedError& e) {
        return error_reply(503, std::string("embedder unavailable: ") + e.what());
    }
    const auto masked = mask_entities(req.query, c->detector->rules().common_words);
    const auto fv = compute_features(req.query);
    json out = verdict;
    out["masked"] = masked.text;
    out["mask_count"] = masked.mask_count;
    out["features"] = {{"query_length", fv.query_length},
                       {"referential_count", fv.referential_count},
                       {"coleman_liau", fv.coleman_liau}};
    return HttpReply{200, out};
}

HttpReply Service::process(const std::string& body) const {
    auto c = snapshot();
    if (!ready_.load() || !c) return error_reply(503, "model is still loading");
    auto parsed = parse_request(body, true);
    if (auto* reply = std::get_if<HttpReply>(&parsed)) return *reply;
    const auto& req = std::get<ParsedRequest>(parsed);

    Router router(c->detector.get(), c->rewriter.get(), c->history_window);
    try {
        auto record = router.process(Conversation{req.history, req.query}, req.mode, req.snippets);
        json out = routing_record_to_json(record);
        out["mode"] = to_string(req.mode);
        return HttpReply{200, out};
    } catch (const ClassificationUnavailable& e) {
        return error_reply(503, std::string("classification unavailable: ") + e.what());
    }
}

HttpReply Service::handle(const std::string& method, const std::string& path, const std::string& body) const {
    if (path == "/healthz") return method == "GET" ? healthz() : error_reply(405, "method not allowed");
    if (path == "/classify") return method == "POST" ? classify(body) : error_reply(405, "method not allowed");
    if (path == "/process") return method == "POST" ? process(body) : error_reply(405, "method not allowed");
    return error_reply(404, "not found");
}

void Service::bind(httplib::Server& server) const {
    auto reply = [](httplib::Response& res, const HttpReply& r) {
        res.status = r.status;
        res.set_content(r.body.dump(), "application/json");
    };
    server.Get("/healthz", [this, reply](const httplib::Request&, httplib::Response& res) { reply(res, healthz()); });
    server.Post("/classify", [this, reply](const httplib::Request& req, httplib::Response& res) {
        reply(res, classify(req.body));
    });
    server.Post("/process", [this, reply](const httplib::Request& req, httplib::Response& res) {
        reply(res, process(req.body));
    });
    server.set_exception_handler([reply](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
        std::string what = "internal error";
        try {
            if (ep) std::rethrow_exception(ep);
        } catch (const std::exception& e) {
            what = e.what();
        } catch (...) {
        }
        reply(res, error_reply(500, what));
    });
}

int Service::bind_to_any_port(const std::string& host) {
    server_ = std::make_unique<httplib::Server>();
    bind(*server_);
    return server_->bind_to_any_port(host);
}

void Service::listen_after_bind() {
    if (server_) server_->listen_after_bind();
}

void Service::stop() {
    if (server_) server_->stop();
}

void Service::serve(const ServiceConfig& config) {
    server_ = std::make_unique<httplib::Server>();
    bind(*server_);
    server_->set_read_timeout(static_cast<time_t>(config.request_timeout_seconds), 0);
    if (!server_->bind_to_port(config.bind_address, config.port)) {
        throw std::runtime_error("cannot bind " + config.bind_address + ":" + std::to_string(config.port));
    }
    std::exception_ptr load_error;
    std::thread loader([&] {
        try {
            set_components(load_components(config));
            std::clog << "model loaded; serving on " << config.bind_address << ":" << config.port << '\n';
        } catch (...) {
            load_error = std::current_exception();
            while (!server_->is_running()) std::this_thread::sleep_for(std::chrono::milliseconds(1));
            server_->stop();
        }
    });
    server_->listen_after_bind();
    loader.join();
    if (load_error) std::rethrow_exception(load_error);
}

}  // namespace qrouter
