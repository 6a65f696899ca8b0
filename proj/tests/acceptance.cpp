// Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any
// failure.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "bleu_oracle.hpp"
#include "gradcheck.hpp"
#include "qrouter/augment.hpp"
#include "qrouter/checkpoint.hpp"
#include "qrouter/eval.hpp"
#include "qrouter/features.hpp"
#include "qrouter/lexical.hpp"
#include "qrouter/text.hpp"
#include "service_golden.hpp"
#include "support.hpp"

using namespace qrouter;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c, d);
    return buf;
}

Outcome gradient_oracle() {
    const auto t0 = Clock::now();
    double worst = 0.0;
    std::size_t coords = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        auto r = qtest::gradient_check(seed, 8, 4, 5, 100, 1e-5);
        worst = std::max(worst, r.max_rel_error);
        coords += r.coordinates;
    }
    const double secs = seconds_since(t0);
    return {worst < 1e-4 && coords == 2000 && secs < 10.0,
            fmt("20 heads, %.0f coordinates, max rel error %.2e, %.2f s", static_cast<double>(coords), worst, secs)};
}

Outcome formula_fidelity() {
    const auto oracle = qtest::load_json(qtest::fixture_path("oracle_values.json"));
    bool ok = oracle["coleman_liau"].size() == 3;
    double worst = 0.0;
    for (auto it = oracle["coleman_liau"].begin(); it != oracle["coleman_liau"].end(); ++it) {
        worst = std::max(worst, std::abs(coleman_liau(Query(it.key())) - it.value().get<double>()));
    }
    ok = ok && worst <= 1e-9;
    const auto& sc = oracle["scaler"];
    std::vector<std::array<double, kNumFeatures>> rows;
    for (double v : sc["column"]) rows.push_back({v, v, v});
    const auto params = fit_scaler(rows);
    bool exact = params.median[0] == sc["median"].get<double>() && params.iqr[0] == sc["iqr"].get<double>();
    for (auto it = sc["scaled"].begin(); it != sc["scaled"].end(); ++it) {
        const double x = std::stod(it.key());
        exact = exact && apply_scaler(params, std::array<double, kNumFeatures>{x, x, x})[0] == it.value().get<double>();
    }
    return {ok && exact, fmt("max |CLI error| %.1e over 3 examples; scaler exact: ", worst) + (exact ? "yes" : "no")};
}

Outcome masking_fixtures() {
    const auto cases = qtest::load_jsonl(qtest::fixture_path("masking.jsonl"));
    const std::set<std::string> common{"pre-requisite", "e-mail",     "opt-in", "follow-up",
                                       "real-time",     "end-to-end", "sign-up"};
    std::size_t exact = 0, idempotent = 0;
    bool has_worked_example = false;
    for (const auto& c : cases) {
        const auto in = c["input"].get<std::string>();
        has_worked_example = has_worked_example || (in == "What is the total size of 124abcde?" &&
                                                    c["expected"] == "What is the total size of ENTITY?");
        const auto m = mask_entities(Query(in), common);
        if (m.text == c["expected"].get<std::string>() && m.mask_count == c["mask_count"].get<std::size_t>()) ++exact;
        if (text::trim(m.text).empty() || mask_entities(Query(m.text), common).text == m.text) ++idempotent;
    }
    const bool pass = cases.size() >= 20 && has_worked_example && exact == cases.size() && idempotent == cases.size();
    return {pass, std::to_string(exact) + "/" + std::to_string(cases.size()) + " byte-exact, " +
                      std::to_string(idempotent) + " idempotent"};
}

Outcome augmentation_fidelity() {
    auto has = [](const std::vector<Query>& qs, const std::string& s) {
        return std::any_of(qs.begin(), qs.end(), [&](const Query& q) { return q.text() == s; });
    };
    const auto omitted = omit_details(Query("What is the name of my largest dataset?"));
    const bool omit_ok = omitted && omitted->text() == "What is the name?";
    bool ref_ok = false, vague_ok = false;
    for (std::uint64_t seed = 0; seed < 100 && !(ref_ok && vague_ok); ++seed) {
        Rng a(seed), b(seed);
        ref_ok = ref_ok || has(add_referential(Query("What is the name?"), a), "What is this name?");
        vague_ok = vague_ok ||
                   has(vague_statement(Query("Tell me about 'ABC' dataset"), b), "There is no such 'ABC' dataset");
    }

    std::vector<DatasetRecord> sources;
    for (auto& r : synthetic_corpus({}))
        if (r.label == AmbiguityLabel::clear) sources.push_back(std::move(r));
    auto serialize = [&](std::uint64_t seed) {
        const auto result = augment_corpus(sources, seed);
        std::string s = augment_report_to_json(result, seed).dump();
        for (const auto& r : result.generated) s += record_to_json(r).dump() + "\n";
        return s;
    };
    const auto first = serialize(42);
    const bool repro = first == serialize(42) && first != serialize(43);
    return {omit_ok && ref_ok && vague_ok && repro,
            std::string("omit_details ") + (omit_ok ? "ok" : "missing") + ", add_referential " +
                (ref_ok ? "ok" : "missing") + ", vague_statement " + (vague_ok ? "ok" : "missing") + ", " +
                std::to_string(sources.size()) + "-source corpus byte-reproducible: " + (repro ? "yes" : "no")};
}

Outcome sampler_balance() {
    std::vector<int> labels(900, 0);
    labels.resize(1000, 1);
    Rng rng(2024);
    std::size_t ambiguous = 0, total = 0;
    for (int b = 0; b < 1000; ++b) {
        for (auto i : weighted_sample(labels, 4, rng)) {
            ambiguous += static_cast<std::size_t>(labels[i]);
            ++total;
        }
    }
    const double frac = static_cast<double>(ambiguous) / static_cast<double>(total);
    return {frac >= 0.45 && frac <= 0.55, fmt("ambiguous fraction %.4f over 1000 batches of 4", frac)};
}

struct Trained {
    TrainResult result;
    CorpusSplits splits;
    double seconds = 0.0;
};

Trained train_synthetic() {
    Trained t;
    const auto t0 = Clock::now();
    t.splits = split_corpus(synthetic_corpus({2500, 2500, 7}), 2024);
    HashingEmbedder embedder;
    t.result = train(t.splits.train, t.splits.validation, TrainConfig{}, embedder);
    t.seconds = seconds_since(t0);
    return t;
}

Outcome training_sanity(const Trained& t) {
    const auto& h = t.result.history;
    double best_f1 = 0.0;
    bool dominates = !h.empty();
    for (const auto& e : h) {
        dominates = dominates && t.result.best_metric >= e.selection_metric;
        if (e.step == t.result.best_step) best_f1 = e.f1;
    }
    const auto cfg = TrainConfig{};
    const bool default_hparams = cfg.learning_rate == 2e-5 && cfg.batch_size == 4 && cfg.epochs <= 3 &&
                               t.result.model.embedder.dim == 768;
    const bool pass = best_f1 >= 0.95 && dominates && default_hparams && t.seconds < 300.0 &&
                      t.splits.train.size() == 3500 && t.splits.validation.size() == 750;
    return {pass, fmt("validation F1 %.4f at step %.0f of %.0f, ", best_f1, static_cast<double>(t.result.best_step),
                      static_cast<double>(t.result.total_steps)) +
                      std::to_string(h.size()) + " evaluations, best metric dominates: " +
                      (dominates ? "yes" : "no") + fmt(", %.1f s", t.seconds)};
}

Outcome routing_law() {
    const auto records = parse_dataset_file(qtest::fixture_path("routing_50.jsonl"));
    std::map<std::string, AmbiguityLabel> labels;
    for (const auto& r : records) labels[r.query.text()] = *r.label;
    qtest::OracleDetector detector(labels);
    qtest::CountingRewriter guided_rw, none_rw;
    Router(&detector, &guided_rw).process_batch(records, FrameworkMode::guided);
    Router(&detector, &none_rw).process_batch(records, FrameworkMode::no_rewrite);
    std::size_t violations = 0, ambiguous = 0;
    for (const auto& r : records) {
        const bool amb = *r.label == AmbiguityLabel::ambiguous;
        ambiguous += amb ? 1 : 0;
        if (guided_rw.calls(r.query.text()) != (amb ? 1u : 0u)) ++violations;
    }
    const bool pass = records.size() == 50 && violations == 0 && guided_rw.total() == ambiguous && none_rw.total() == 0;
    return {pass, std::to_string(records.size()) + " records (" + std::to_string(ambiguous) +
                      " ambiguous): guided calls " + std::to_string(guided_rw.total()) + ", no_rewrite calls " +
                      std::to_string(none_rw.total()) + ", violations " + std::to_string(violations)};
}

Outcome framework_ordering(const Trained& t) {
    auto model = std::make_shared<ClassifierModel>(t.result.model);
    auto embedder = std::make_shared<HashingEmbedder>();
    ModelDetector detector(model, embedder);
    bool pass = true;
    std::ostringstream detail;
    for (std::uint64_t seed : {101u, 202u, 303u}) {
        const auto records = synthetic_rewrite_corpus(150, 150, seed);
        std::map<std::string, std::string> golden;
        std::vector<std::string> clear_texts;
        for (const auto& r : records) {
            golden[r.query.text()] = *r.golden_rewrite;
            if (*r.label == AmbiguityLabel::clear) clear_texts.push_back(r.query.text());
        }
        qtest::CorruptingRewriter rewriter(golden, 0.3, seed, clear_texts);
        const auto reports = compare_frameworks(records, detector, rewriter, *embedder);
        std::map<FrameworkMode, FrameworkReport> by;
        for (const auto& r : reports) by.emplace(r.mode, r);
        const auto& none = by.at(FrameworkMode::no_rewrite);
        const auto& always = by.at(FrameworkMode::always_rewrite);
        const auto& guided = by.at(FrameworkMode::guided);
        const bool ok = records.size() >= 200 && guided.mean_bleu > always.mean_bleu &&
                        guided.mean_cosine > always.mean_cosine && always.mean_cosine > none.mean_cosine;
        pass = pass && ok;
        detail << (seed == 101 ? "" : "; ") << "seed " << seed << " n=" << records.size()
               << fmt(" bleu none/always/guided %.3f/%.3f/%.3f", none.mean_bleu, always.mean_bleu, guided.mean_bleu)
               << fmt(" cosine %.3f/%.3f/%.3f", none.mean_cosine, always.mean_cosine, guided.mean_cosine);
    }
    return {pass, detail.str()};
}

Outcome bleu_oracle() {
    const auto oracle = qtest::load_json(qtest::fixture_path("oracle_values.json"))["bleu"];
    double worst = 0.0;
    bool has_worked = false;
    for (const auto& p : oracle) {
        const auto c = p["candidate"].get<std::string>(), r = p["reference"].get<std::string>();
        has_worked = has_worked || (c == "how many do i have" && r == "how many segments do i have");
        const double ours = bleu_avg12(c, r);
        worst = std::max(worst, std::abs(ours - qtest::brute_force_bleu(bleu_tokenize(c), bleu_tokenize(r))));
        worst = std::max(worst, std::abs(ours - p["avg12"].get<double>()));
    }
    return {oracle.size() >= 5 && has_worked && worst <= 1e-9,
            fmt("%.0f pairs, max deviation %.1e", static_cast<double>(oracle.size()), worst)};
}

Outcome latency(const Trained& t) {
    HashingEmbedder embedder;
    LexicalRules rules;
    std::vector<const DatasetRecord*> pool;
    for (const auto& r : t.splits.test) pool.push_back(&r);
    std::vector<double> ms;
    for (std::size_t i = 0; i < 1000; ++i) {
        const Query& q = pool[i % pool.size()]->query;
        const auto t0 = Clock::now();
        volatile auto label = classify(t.result.model, embedder, q, rules).label;
        (void)label;
        ms.push_back(seconds_since(t0) * 1000.0);
    }
    std::nth_element(ms.begin(), ms.begin() + 500, ms.end());
    const double median = ms[500];
    return {median < 10.0, fmt("median %.3f ms over 1000 queries", median)};
}

Outcome persistence(const Trained& t) {
    HashingEmbedder embedder;
    LexicalRules rules;
    const auto bytes = save_checkpoint(t.result.model);
    const auto loaded = load_checkpoint(bytes);
    std::size_t identical = 0;
    for (std::size_t i = 0; i < 100; ++i) {
        const auto& q = t.splits.test[i].query;
        const auto a = classify(t.result.model, embedder, q, rules);
        const auto b = classify(loaded, embedder, q, rules);
        if (a.label == b.label && a.score == b.score && a.source == b.source) ++identical;
    }
    auto rejected = [](const std::string& s, CheckpointError::Kind kind) {
        try {
            load_checkpoint(s);
        } catch (const CheckpointError& e) {
            return e.kind() == kind;
        }
        return false;
    };
    std::size_t flips = 0, caught = 0;
    Rng rng(5);
    const auto data_begin = bytes.find("\"data\"");
    std::uniform_int_distribution<std::size_t> pos(data_begin, bytes.size() - 100);
    while (flips < 20) {
        auto copy = bytes;
        const std::size_t p = pos(rng);
        if (!std::isdigit(static_cast<unsigned char>(copy[p]))) continue;
        copy[p] = copy[p] == '0' ? '1' : '0';
        ++flips;
        if (rejected(copy, CheckpointError::Kind::checksum)) ++caught;
    }
    auto doc = json::parse(bytes);
    doc["format_version"] = "9";
    const bool structural = rejected(bytes.substr(0, bytes.size() / 2), CheckpointError::Kind::corrupt) &&
                            rejected(doc.dump(), CheckpointError::Kind::unsupported_version) &&
                            rejected("garbage", CheckpointError::Kind::corrupt);
    return {identical == 100 && caught == flips && structural,
            std::to_string(identical) + "/100 identical verdicts; " + std::to_string(caught) + "/" +
                std::to_string(flips) + " digit flips rejected; truncation/version/garbage rejected: " +
                (structural ? "yes" : "no")};
}

Outcome service_conformance() {
    const auto outcomes = qtest::run_service_golden();
    std::size_t passed = 0;
    std::string failures;
    for (const auto& o : outcomes) {
        if (o.passed) {
            ++passed;
        } else {
            failures += " " + o.name + " (" + o.detail + ")";
        }
    }
    return {passed == outcomes.size() && outcomes.size() >= 20,
            std::to_string(passed) + "/" + std::to_string(outcomes.size()) + " golden cases" +
                (failures.empty() ? "" : "; failing:" + failures)};
}

}  // namespace

int main() {
    int failed = 0;
    auto report = [&](int id, const std::string& name, const std::function<Outcome()>& fn) {
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        if (!o.pass) ++failed;
        std::printf("%s %2d %-24s %s\n", o.pass ? "PASS" : "FAIL", id, name.c_str(), o.detail.c_str());
        std::fflush(stdout);
    };

    report(1, "gradient-oracle", gradient_oracle);
    report(2, "formula-fidelity", formula_fidelity);
    report(3, "masking-fixtures", masking_fixtures);
    report(4, "augmentation-fidelity", augmentation_fidelity);
    report(5, "sampler-balance", sampler_balance);

    std::optional<Trained> trained;
    report(6, "training-sanity", [&] {
        trained = train_synthetic();
        return training_sanity(*trained);
    });
    auto needs_model = [&](Outcome (*fn)(const Trained&)) {
        return [&trained, fn] { return trained ? fn(*trained) : Outcome{false, "no trained model"}; };
    };
    report(7, "routing-law", routing_law);
    report(8, "framework-ordering", needs_model(framework_ordering));
    report(9, "bleu-oracle", bleu_oracle);
    report(10, "classify-latency", needs_model(latency));
    report(11, "persistence", needs_model(persistence));
    report(12, "service-conformance", service_conformance);

    std::printf("%d/12 criteria passed\n", 12 - failed);
    return failed == 0 ? 0 : 1;
}
