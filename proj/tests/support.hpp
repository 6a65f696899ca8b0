#pragma once

#include <atomic>
#include <cmath>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>
#include <string>
#include <vector>

#include "qrouter/classifier.hpp"
#include "qrouter/json_io.hpp"
#include "qrouter/pipeline.hpp"
#include "qrouter/rewrite.hpp"
#include "qrouter/synthetic.hpp"

namespace qtest {

using qrouter::json;

inline std::string fixture_path(const std::string& name) { return std::string(QROUTER_FIXTURE_DIR) + "/" + name; }
inline std::string schema_path(const std::string& name) { return std::string(QROUTER_SCHEMA_DIR) + "/" + name; }

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline json load_json(const std::string& path) { return json::parse(read_file(path)); }

inline std::vector<json> load_jsonl(const std::string& path) {
    std::vector<json> out;
    std::ifstream in(path);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty()) out.push_back(json::parse(line));
    }
    return out;
}

// Validates the subset of JSON Schema used under docs/schema: type (string or
// list), enum, required, properties, additionalProperties=false, minimum,
// maximum, minLength. Returns the list of violations.
inline void check_schema(const json& schema, const json& value, const std::string& where,
                         std::vector<std::string>& problems) {
    auto type_ok = [&](const std::string& t) {
        if (t == "object") return value.is_object();
        if (t == "array") return value.is_array();
        if (t == "string") return value.is_string();
        if (t == "number") return value.is_number();
        if (t == "integer") return value.is_number_integer();
        if (t == "boolean") return value.is_boolean();
        if (t == "null") return value.is_null();
        return false;
    };
    if (schema.contains("type")) {
        bool ok = false;
        if (schema["type"].is_array()) {
            for (const auto& t : schema["type"]) ok = ok || type_ok(t.get<std::string>());
        } else {
            ok = type_ok(schema["type"].get<std::string>());
        }
        if (!ok) {
            problems.push_back(where + ": wrong type " + value.dump());
            return;
        }
    }
    if (schema.contains("enum")) {
        bool found = false;
        for (const auto& e : schema["enum"]) found = found || e == value;
        if (!found) problems.push_back(where + ": " + value.dump() + " not in enum");
    }
    if (value.is_number()) {
        if (schema.contains("minimum") && value.get<double>() < schema["minimum"].get<double>()) {
            problems.push_back(where + ": below minimum");
        }
        if (schema.contains("maximum") && value.get<double>() > schema["maximum"].get<double>()) {
            problems.push_back(where + ": above maximum");
        }
    }
    if (value.is_string() && schema.contains("minLength") &&
        value.get<std::string>().size() < schema["minLength"].get<std::size_t>()) {
        problems.push_back(where + ": too short");
    }
    if (value.is_object()) {
        if (schema.contains("required")) {
            for (const auto& r : schema["required"]) {
                if (!value.contains(r.get<std::string>())) problems.push_back(where + ": missing " + r.dump());
            }
        }
        const json props = schema.value("properties", json::object());
        for (auto it = value.begin(); it != value.end(); ++it) {
            if (props.contains(it.key())) {
                check_schema(props[it.key()], it.value(), where + "." + it.key(), problems);
            } else if (schema.contains("additionalProperties") && schema["additionalProperties"] == false) {
                problems.push_back(where + ": unexpected property " + it.key());
            }
        }
    }
}

inline std::vector<std::string> schema_problems(const std::string& schema_file, const json& value) {
    std::vector<std::string> problems;
    check_schema(load_json(schema_path(schema_file)), value, "$", problems);
    return problems;
}

// Head whose output ignores the input: P(ambiguous) = softmax([0, bias])[1].
inline std::shared_ptr<qrouter::ClassifierModel> constant_model(double bias, std::size_t dim = 768,
                                                                 std::size_t hidden = 4) {
    auto m = std::make_shared<qrouter::ClassifierModel>();
    m->head = qrouter::HeadWeights::zeros(dim + qrouter::kNumFeatures, hidden, 0.1);
    m->head.b2 = {0.0, bias};
    m->embedder = qrouter::EmbedderSpec{qrouter::EmbedderKind::hashing, dim, "hash3-v1"};
    m->train_config.hidden = hidden;
    return m;
}

// Detector returning a fixed label per query text; unknown texts are clear.
class OracleDetector final : public qrouter::AmbiguityDetector {
public:
    explicit OracleDetector(std::map<std::string, qrouter::AmbiguityLabel> labels) : labels_(std::move(labels)) {}
    qrouter::AmbiguityVerdict detect(const qrouter::Query& q) const override {
        auto it = labels_.find(q.text());
        auto label = it == labels_.end() ? qrouter::AmbiguityLabel::clear : it->second;
        return qrouter::AmbiguityVerdict{label, qrouter::AmbiguityType::unknown,
                                         label == qrouter::AmbiguityLabel::ambiguous ? 1.0 : 0.0,
                                         qrouter::VerdictSource::model};
    }

private:
    std::map<std::string, qrouter::AmbiguityLabel> labels_;
};

// Wraps another rewriter and counts calls per query text.
class CountingRewriter final : public qrouter::Rewriter {
public:
    explicit CountingRewriter(std::shared_ptr<const qrouter::Rewriter> inner = std::make_shared<qrouter::MockRewriter>())
        : inner_(std::move(inner)) {}
    qrouter::RewriteResult rewrite(const qrouter::Query& q, const qrouter::RewriteContext& ctx) const override {
        {
            std::lock_guard lock(mutex_);
            ++calls_[q.text()];
            last_context_ = ctx;
        }
        ++total_;
        return inner_->rewrite(q, ctx);
    }
    std::size_t total() const { return total_.load(); }
    std::size_t calls(const std::string& text) const {
        std::lock_guard lock(mutex_);
        auto it = calls_.find(text);
        return it == calls_.end() ? 0 : it->second;
    }
    qrouter::RewriteContext last_context() const {
        std::lock_guard lock(mutex_);
        return last_context_;
    }

private:
    std::shared_ptr<const qrouter::Rewriter> inner_;
    mutable std::mutex mutex_;
    mutable std::map<std::string, std::size_t> calls_;
    mutable qrouter::RewriteContext last_context_;
    mutable std::atomic<std::size_t> total_{0};
};

class FailingRewriter final : public qrouter::Rewriter {
public:
    explicit FailingRewriter(std::string fail_on = {}) : fail_on_(std::move(fail_on)) {}
    qrouter::RewriteResult rewrite(const qrouter::Query& q, const qrouter::RewriteContext&) const override {
        if (fail_on_.empty() || q.text() == fail_on_) throw qrouter::RewriteError("rewriter timed out", 3);
        return qrouter::RewriteResult{q, q.text(), 0.0};
    }

private:
    std::string fail_on_;
};

// Rewrites ambiguous queries to their golden text and corrupts clear ones
// with probability p, decided per query text by a seeded hash. A corrupted
// rewrite is another query drawn from `substitutes` (a wrong but on-topic
// answer), or a fixed unrelated sentence when `substitutes` is empty.
class CorruptingRewriter final : public qrouter::Rewriter {
public:
    CorruptingRewriter(std::map<std::string, std::string> golden, double p, std::uint64_t seed,
                       std::vector<std::string> substitutes = {})
        : golden_(std::move(golden)), p_(p), seed_(seed), substitutes_(std::move(substitutes)) {}
    qrouter::RewriteResult rewrite(const qrouter::Query& q, const qrouter::RewriteContext&) const override {
        auto it = golden_.find(q.text());
        if (it != golden_.end() && it->second != q.text()) return {qrouter::Query(it->second), it->second, 0.0};
        std::seed_seq seq(q.text().begin(), q.text().end());
        std::mt19937_64 rng(seq);
        rng.seed(rng() ^ seed_);
        if (std::uniform_real_distribution<double>(0.0, 1.0)(rng) >= p_) return {q, q.text(), 0.0};
        std::string junk = "Could you clarify what you mean by that request";
        if (!substitutes_.empty()) {
            do {
                junk = substitutes_[rng() % substitutes_.size()];
            } while (junk == q.text() && substitutes_.size() > 1);
        }
        return {qrouter::Query(junk), junk, 0.0};
    }

private:
    std::map<std::string, std::string> golden_;
    double p_;
    std::uint64_t seed_;
    std::vector<std::string> substitutes_;
};

class DownEmbedder final : public qrouter::Embedder {
public:
    explicit DownEmbedder(std::size_t dim = 768) : spec_{qrouter::EmbedderKind::remote, dim, "down"} {}
    const qrouter::EmbedderSpec& spec() const override { return spec_; }
    qrouter::Embedding embed(std::string_view) const override {
        throw qrouter::EmbedError(qrouter::EmbedError::Kind::retryable, "connection refused");
    }

private:
    qrouter::EmbedderSpec spec_;
};

// A model trained once per process on the default synthetic corpus.
struct TrainedFixture {
    qrouter::TrainResult result;
    qrouter::CorpusSplits splits;
};

inline const TrainedFixture& trained_fixture() {
    static const TrainedFixture fixture = [] {
        TrainedFixture f;
        f.splits = qrouter::split_corpus(qrouter::synthetic_corpus({}), 11);
        qrouter::HashingEmbedder embedder;
        f.result = qrouter::train(f.splits.train, f.splits.validation, qrouter::TrainConfig{}, embedder);
        return f;
    }();
    return fixture;
}

}  // namespace qtest
