#pragma once

// HTTP front end:
//   POST /classify {query, history?}              -> verdict, masked text, features
//   POST /process  {query, history?, mode?, snippets?} -> routing record
//   GET  /healthz                                  -> {status, model_version}
// Handlers are plain functions of the request body so they can be tested
// without a socket; Service::listen binds them to cpp-httplib.

#include <atomic>
#include <memory>
#include <mutex>
#include <string>

#include "qrouter/config.hpp"
#include "qrouter/json_io.hpp"
#include "qrouter/pipeline.hpp"

namespace httplib {
class Server;
}

namespace qrouter {

struct HttpReply {
    int status = 200;
    json body;
};

/// Loaded, immutable serving components.
struct ServiceComponents {
    std::shared_ptr<const ModelDetector> detector;
    std::shared_ptr<const Rewriter> rewriter;
    std::size_t history_window = kDefaultHistoryWindow;
};

/// Builds the detector and rewriter described by `config`; throws on any
/// checkpoint, lexicon or template problem.
ServiceComponents load_components(const ServiceConfig& config);

class Service {
public:
    Service();
    ~Service();

    /// Makes the service ready. Until then every endpoint answers 503.
    void set_components(ServiceComponents components);
    bool ready() const noexcept { return ready_.load(); }

    HttpReply healthz() const;
    HttpReply classify(const std::string& body) const;
    HttpReply process(const std::string& body) const;

    /// Routes a request to the matching handler (404/405 otherwise).
    HttpReply handle(const std::string& method, const std::string& path, const std::string& body) const;

    void bind(httplib::Server& server) const;

    /// Binds and serves until stop(). Loads components from `config` on a
    /// background thread so /healthz answers 503 while loading.
    void serve(const ServiceConfig& config);
    int bind_to_any_port(const std::string& host);
    void listen_after_bind();
    void stop();

private:
    std::shared_ptr<const ServiceComponents> snapshot() const;

    mutable std::mutex mutex_;
    std::shared_ptr<const ServiceComponents> components_;
    std::atomic<bool> ready_{false};
    std::unique_ptr<httplib::Server> server_;
};

}  // namespace qrouter
