#pragma once

// Ambiguity-guided routing: classify the current query and send it through
// the rewriter only when it is ambiguous. The two baseline policies (never
// rewrite, always rewrite) are available for comparison.

#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "qrouter/classifier.hpp"
#include "qrouter/json_io.hpp"
#include "qrouter/rewrite.hpp"

namespace qrouter {

enum class FrameworkMode { no_rewrite, always_rewrite, guided };

std::string_view to_string(FrameworkMode mode);
FrameworkMode mode_from_string(std::string_view s);
inline constexpr FrameworkMode kAllModes[] = {FrameworkMode::no_rewrite, FrameworkMode::always_rewrite,
                                              FrameworkMode::guided};

struct StageTimings {
    double classify_ms = 0.0;
    double rewrite_ms = 0.0;
    double total_ms = 0.0;
};

struct RoutingRecord {
    Query original;
    std::optional<AmbiguityVerdict> verdict;  // set in guided mode only
    bool rewrite_invoked = false;
    Query routed;
    bool degraded = false;              // rewriter failed; original forwarded
    std::optional<std::string> error;   // failure description, batch mode
    StageTimings timings;
};

json routing_record_to_json(const RoutingRecord& record);

class AmbiguityDetector {
public:
    virtual ~AmbiguityDetector() = default;
    virtual AmbiguityVerdict detect(const Query& q) const = 0;
};

/// The trained head plus lexical rules.
class ModelDetector final : public AmbiguityDetector {
public:
    ModelDetector(std::shared_ptr<const ClassifierModel> model, std::shared_ptr<const Embedder> embedder,
                  LexicalRules rules = {});

    AmbiguityVerdict detect(const Query& q) const override;

    const ClassifierModel& model() const noexcept { return *model_; }
    const Embedder& embedder() const noexcept { return *embedder_; }
    const LexicalRules& rules() const noexcept { return rules_; }

private:
    std::shared_ptr<const ClassifierModel> model_;
    std::shared_ptr<const Embedder> embedder_;
    LexicalRules rules_;
};

/// Guided mode could not classify (the embedder failed). Carries whether a
/// retry may succeed.
class ClassificationUnavailable : public std::runtime_error {
public:
    ClassificationUnavailable(const std::string& message, bool retryable)
        : std::runtime_error(message), retryable_(retryable) {}
    bool retryable() const noexcept { return retryable_; }

private:
    bool retryable_;
};

class Router {
public:
    /// `detector` is required for guided mode and `rewriter` for guided and
    /// always_rewrite; either may be null otherwise. Both must outlive the
    /// router.
    Router(const AmbiguityDetector* detector, const Rewriter* rewriter,
           std::size_t history_window = kDefaultHistoryWindow);

    /// Throws ClassificationUnavailable in guided mode when classification
    /// fails. Rewriter failures never throw: the original query is routed
    /// and the record is marked degraded.
    RoutingRecord process(const Conversation& conv, FrameworkMode mode,
                          const std::vector<std::string>& snippets = {}) const;

    /// Order-preserving; a failing record is marked degraded with `error`
    /// set and does not abort the batch.
    std::vector<RoutingRecord> process_batch(const std::vector<DatasetRecord>& records, FrameworkMode mode) const;

private:
    const AmbiguityDetector* detector_;
    const Rewriter* rewriter_;
    std::size_t window_;
};

}  // namespace qrouter
