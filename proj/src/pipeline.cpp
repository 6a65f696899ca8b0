#include "qrouter/pipeline.hpp"

#include <chrono>

namespace qrouter {
namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

}  // namespace

std::string_view to_string(FrameworkMode mode) {
    switch (mode) {
        case FrameworkMode::no_rewrite: return "no_rewrite";
        case FrameworkMode::always_rewrite: return "always_rewrite";
        case FrameworkMode::guided: return "guided";
    }
    return "guided";
}

FrameworkMode mode_from_string(std::string_view s) {
    if (s == "no_rewrite") return FrameworkMode::no_rewrite;
    if (s == "always_rewrite") return FrameworkMode::always_rewrite;
    if (s == "guided") return FrameworkMode::guided;
    throw std::invalid_argument("unknown mode \"" + std::string(s) + "\"");
}

json routing_record_to_json(const RoutingRecord& record) {
    json j{{"original", record.original.text()},
           {"routed", record.routed.text()},
           {"rewrite_invoked", record.rewrite_invoked},
           {"degraded", record.degraded},
           {"verdict", nullptr},
           {"timings_ms",
            {{"classify", record.timings.classify_ms},
             {"rewrite", record.timings.rewrite_ms},
             {"total", record.timings.total_ms}}}};
    if (record.verdict) j["verdict"] = *record.verdict;
    if (record.error) j["error"] = *record.error;
    return j;
}

ModelDetector::ModelDetector(std::shared_ptr<const ClassifierModel> model, std::shared_ptr<const Embedder> embedder,
                             LexicalRules rules)
    : model_(std::move(model)), embedder_(std::move(embedder)), rules_(std::move(rules)) {
    if (!model_ || !embedder_) throw std::invalid_argument("ModelDetector requires a model and an embedder");
    model_->check_consistency();
    if (embedder_->spec().dim != model_->embedder.dim) {
        throw std::invalid_argument("embedder dim " + std::to_string(embedder_->spec().dim) +
                                    " does not match model dim " + std::to_string(model_->embedder.dim));
    }
}

AmbiguityVerdict ModelDetector::detect(const Query& q) const {
    return classify(*model_, *embedder_, q, rules_);
}

Router::Router(const AmbiguityDetector* detector, const Rewriter* rewriter, std::size_t history_window)
    : detector_(detector), rewriter_(rewriter), window_(history_window) {
    if (window_ == 0) throw std::invalid_argument("history window must be >= 1");
}

RoutingRecord Router::process(const Conversation& conv, FrameworkMode mode,
                              const std::vector<std::string>& snippets) const {
    const auto start = Clock::now();
    RoutingRecord record{conv.current, std::nullopt, false, conv.current, false, std::nullopt, {}};

    if (mode == FrameworkMode::no_rewrite) {
        record.timings.total_ms = ms_since(start);
        return record;
    }
    if (!rewriter_) throw std::logic_error(std::string(to_string(mode)) + " mode requires a rewriter");

    bool rewrite = true;
    if (mode == FrameworkMode::guided) {
        if (!detector_) throw std::logic_error("guided mode requires a detector");
        const auto t0 = Clock::now();
        try {
            record.verdict = detector_->detect(conv.current);
        } catch (const EmbedError& e) {
            throw ClassificationUnavailable(e.what(), e.retryable());
        }
        record.timings.classify_ms = ms_since(t0);
        rewrite = record.verdict->label == AmbiguityLabel::ambiguous;
    }

    if (rewrite) {
        const auto t0 = Clock::now();
        record.rewrite_invoked = true;
        const Conversation truncated = truncate_history(conv, window_);
        try {
            record.routed = rewriter_->rewrite(conv.current, RewriteContext{truncated.turns, snippets}).rewritten;
        } catch (const RewriteError& e) {
            record.routed = conv.current;
            record.degraded = true;
            record.error = e.what();
        }
        record.timings.rewrite_ms = ms_since(t0);
    }
    record.timings.total_ms = ms_since(start);
    return record;
}

std::vector<RoutingRecord> Router::process_batch(const std::vector<DatasetRecord>& records,
                                                 FrameworkMode mode) const {
    std::vector<RoutingRecord> out;
    out.reserve(records.size());
    for (const auto& r : records) {
        Conversation conv{r.history, r.query};
        try {
            out.push_back(process(conv, mode));
        } catch (const std::exception& e) {
            RoutingRecord failed{r.query, std::nullopt, false, r.query, true, std::string(e.what()), {}};
            out.push_back(std::move(failed));
        }
    }
    return out;
}

}  // namespace qrouter
