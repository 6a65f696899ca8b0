#include "qrouter/cli.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "qrouter/augment.hpp"
#include "qrouter/checkpoint.hpp"
#include "qrouter/config.hpp"
#include "qrouter/eval.hpp"
#include "qrouter/lexical.hpp"
#include "qrouter/pipeline.hpp"
#include "qrouter/service.hpp"
#include "qrouter/synthetic.hpp"
#include "qrouter/text.hpp"

namespace qrouter {
namespace {

// Failure with a machine-readable kind, reported as one JSON line.
struct CliFailure {
    std::string kind;
    std::string message;
    int status = 1;
};

void report(std::ostream& err, const CliFailure& f) {
    err << json{{"error", f.kind}, {"message", f.message}}.dump() << '\n';
}

// Opens `path`, or hands back `fallback` when the path is empty or "-".
class InputSource {
public:
    InputSource(const std::string& path, std::istream& fallback) : stream_(&fallback) {
        if (!path.empty() && path != "-") {
            file_.open(path);
            if (!file_) throw CliFailure{"io", "cannot open " + path};
            stream_ = &file_;
        }
    }
    std::istream& get() { return *stream_; }

private:
    std::ifstream file_;
    std::istream* stream_;
};

class OutputSink {
public:
    OutputSink(const std::string& path, std::ostream& fallback) : stream_(&fallback) {
        if (!path.empty() && path != "-") {
            file_.open(path, std::ios::binary);
            if (!file_) throw CliFailure{"io", "cannot write " + path};
            stream_ = &file_;
        }
    }
    std::ostream& get() { return *stream_; }

private:
    std::ofstream file_;
    std::ostream* stream_;
};

struct LexiconOptions {
    std::string entity_types;
    std::string common_words;

    void add(CLI::App* app) {
        app->add_option("--entity-types", entity_types, "Entity-type word list (one per line)");
        app->add_option("--common-words", common_words, "Hyphenated common words exempt from masking");
    }

    LexicalRules load() const {
        LexicalRules rules;
        if (!entity_types.empty()) rules.entity_types = EntityTypeLexicon::from_file(entity_types);
        if (!common_words.empty()) rules.common_words = load_word_list(common_words);
        return rules;
    }
};

struct EmbedderOptions {
    std::string url;
    std::string token_env;
    double timeout = 10.0;

    void add(CLI::App* app) {
        app->add_option("--embedder-url", url, "Endpoint for a remote embedder checkpoint");
        app->add_option("--embedder-token-env", token_env, "Environment variable holding the embedder token");
        app->add_option("--embedder-timeout", timeout, "Remote embedder timeout in seconds");
    }

    std::shared_ptr<Embedder> make(const EmbedderSpec& spec) const {
        RemoteEmbedderConfig remote{url, spec.identity, spec.dim, token_env, timeout, 4};
        if (spec.kind == EmbedderKind::remote && url.empty()) {
            throw CliFailure{"usage", "checkpoint uses a remote embedder; pass --embedder-url", 2};
        }
        return make_embedder(spec, &remote);
    }
};

// Reads either dataset JSON lines or plain query lines.
std::vector<DatasetRecord> read_queries(std::istream& in) {
    std::vector<DatasetRecord> out;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        auto trimmed = text::trim(line);
        if (trimmed.empty()) continue;
        if (trimmed.front() == '{') {
            std::istringstream one(line);
            auto recs = parse_dataset(one);
            for (auto& r : recs) out.push_back(std::move(r));
        } else {
            out.push_back(DatasetRecord{"line-" + std::to_string(n), Query(std::string(trimmed)), std::nullopt, {},
                                        std::nullopt});
        }
    }
    return out;
}

std::shared_ptr<const ClassifierModel> load_model(const std::string& path) {
    return std::make_shared<const ClassifierModel>(load_checkpoint_file(path));
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err) {
    CLI::App app{"Ambiguity-guided query routing: detect ambiguous queries and rewrite only those."};
    app.name("qrouter");
    app.require_subcommand(1);

    // train
    auto* train_cmd = app.add_subcommand("train", "Train the classifier head; writes a checkpoint");
    std::string train_data, val_data, train_out = "-";
    TrainConfig cfg;
    std::size_t dim = 768;
    std::string identity = "hash3-v1";
    double holdout = 0.15;
    train_cmd->add_option("--data", train_data, "Training dataset (JSON lines); stdin when omitted");
    train_cmd->add_option("--validation", val_data, "Validation dataset; otherwise a holdout of --data");
    train_cmd->add_option("--holdout", holdout, "Validation fraction when --validation is omitted")
        ->check(CLI::Range(0.01, 0.9));
    train_cmd->add_option("--out", train_out, "Checkpoint path; stdout when omitted");
    train_cmd->add_option("--seed", cfg.seed, "Random seed");
    train_cmd->add_option("--epochs", cfg.epochs)->check(CLI::PositiveNumber);
    train_cmd->add_option("--lr", cfg.learning_rate)->check(CLI::PositiveNumber);
    train_cmd->add_option("--batch-size", cfg.batch_size)->check(CLI::PositiveNumber);
    train_cmd->add_option("--eval-every", cfg.eval_every)->check(CLI::PositiveNumber);
    train_cmd->add_option("--hidden", cfg.hidden)->check(CLI::PositiveNumber);
    train_cmd->add_option("--dropout", cfg.dropout_p)->check(CLI::Range(0.0, 0.99));
    train_cmd->add_option("--threshold", cfg.threshold)->check(CLI::Range(0.01, 0.99));
    train_cmd->add_option("--dim", dim, "Hashing embedder dimension")->check(CLI::PositiveNumber);
    train_cmd->add_option("--embedder-identity", identity, "Hashing embedder seed tag");

    // classify
    auto* classify_cmd = app.add_subcommand("classify", "Classify queries (plain lines or dataset JSON lines)");
    std::string ckpt, classify_in, classify_out;
    LexiconOptions classify_lex;
    EmbedderOptions classify_emb;
    classify_cmd->add_option("--checkpoint", ckpt, "Model checkpoint")->required();
    classify_cmd->add_option("--input", classify_in, "Input file; stdin when omitted");
    classify_cmd->add_option("--output", classify_out, "Output file; stdout when omitted");
    classify_lex.add(classify_cmd);
    classify_emb.add(classify_cmd);

    // mask
    auto* mask_cmd = app.add_subcommand("mask", "Mask data entities in each input line");
    std::string mask_in, mask_out, mask_common;
    mask_cmd->add_option("--input", mask_in, "Input file; stdin when omitted");
    mask_cmd->add_option("--output", mask_out, "Output file; stdout when omitted");
    mask_cmd->add_option("--common-words", mask_common, "Hyphenated common words exempt from masking");

    // augment
    auto* augment_cmd = app.add_subcommand("augment", "Generate ambiguous queries from clear ones");
    std::string aug_in, aug_out, aug_report;
    std::uint64_t aug_seed = 42;
    LexiconOptions aug_lex;
    augment_cmd->add_option("--input", aug_in, "Dataset; stdin when omitted");
    augment_cmd->add_option("--output", aug_out, "Augmented dataset; stdout when omitted");
    augment_cmd->add_option("--report", aug_report, "Per-rule report (JSON)");
    augment_cmd->add_option("--seed", aug_seed);
    aug_lex.add(augment_cmd);

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "Score a checkpoint on a labeled dataset");
    std::string eval_ckpt, eval_data;
    LexiconOptions eval_lex;
    EmbedderOptions eval_emb;
    eval_cmd->add_option("--checkpoint", eval_ckpt)->required();
    eval_cmd->add_option("--data", eval_data, "Labeled dataset; stdin when omitted");
    eval_lex.add(eval_cmd);
    eval_emb.add(eval_cmd);

    // compare
    auto* compare_cmd = app.add_subcommand("compare", "Compare no/always/guided rewriting on golden rewrites");
    std::string cmp_ckpt, cmp_data, cmp_table, cmp_report, cmp_llm_url, cmp_llm_model, cmp_llm_token;
    LexiconOptions cmp_lex;
    EmbedderOptions cmp_emb;
    compare_cmd->add_option("--checkpoint", cmp_ckpt)->required();
    compare_cmd->add_option("--data", cmp_data, "Dataset with golden_rewrite; stdin when omitted");
    compare_cmd->add_option("--mock-table", cmp_table, "JSON object mapping query -> rewrite");
    compare_cmd->add_option("--llm-url", cmp_llm_url, "Chat-completions endpoint for the rewriter");
    compare_cmd->add_option("--llm-model", cmp_llm_model);
    compare_cmd->add_option("--llm-token-env", cmp_llm_token);
    compare_cmd->add_option("--report", cmp_report, "Write the JSON report here");
    cmp_lex.add(compare_cmd);
    cmp_emb.add(compare_cmd);

    // serve
    auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP service");
    std::string serve_config;
    std::optional<int> serve_port;
    std::optional<std::string> serve_host;
    serve_cmd->add_option("--config", serve_config, "Service config (JSON)")->required();
    serve_cmd->add_option("--port", serve_port);
    serve_cmd->add_option("--host", serve_host);

    // synth
    auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic labeled corpus");
    std::size_t synth_clear = 2500, synth_amb = 2500;
    std::uint64_t synth_seed = 7;
    bool synth_golden = false;
    std::string synth_out;
    synth_cmd->add_option("--clear", synth_clear);
    synth_cmd->add_option("--ambiguous", synth_amb);
    synth_cmd->add_option("--seed", synth_seed);
    synth_cmd->add_flag("--golden", synth_golden, "Attach golden rewrites and history");
    synth_cmd->add_option("--output", synth_out);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << app.help();
        report(err, CliFailure{"usage", e.what(), 2});
        return 2;
    }

    try {
        if (*train_cmd) {
            InputSource src(train_data, in);
            auto records = parse_dataset(src.get());
            std::vector<DatasetRecord> validation;
            if (!val_data.empty()) {
                validation = parse_dataset_file(val_data);
            } else {
                auto splits = split_corpus(std::move(records), cfg.seed, 1.0 - holdout, holdout);
                records = std::move(splits.train);
                validation = std::move(splits.validation);
            }
            HashingEmbedder embedder(dim, identity);
            auto result = train(records, validation, cfg, embedder);
            OutputSink sink(train_out, out);
            sink.get() << save_checkpoint(result.model);
            json history = json::array();
            for (const auto& e : result.history) {
                history.push_back({{"step", e.step},
                                   {"recall", e.recall},
                                   {"f1", e.f1},
                                   {"metric", e.selection_metric},
                                   {"validation_loss", e.validation_loss}});
            }
            err << json{{"best_step", result.best_step},
                        {"best_metric", result.best_metric},
                        {"total_steps", result.total_steps},
                        {"history", history}}
                       .dump()
                << '\n';
            return 0;
        }
        if (*classify_cmd) {
            auto model = load_model(ckpt);
            ModelDetector detector(model, classify_emb.make(model->embedder), classify_lex.load());
            InputSource src(classify_in, in);
            OutputSink sink(classify_out, out);
            for (const auto& r : read_queries(src.get())) {
                json line = detector.detect(r.query);
                line["id"] = r.id;
                line["query"] = r.query.text();
                sink.get() << line.dump() << '\n';
            }
            return 0;
        }
        if (*mask_cmd) {
            const auto common = mask_common.empty() ? default_common_words() : load_word_list(mask_common);
            InputSource src(mask_in, in);
            OutputSink sink(mask_out, out);
            std::string line;
            while (std::getline(src.get(), line)) {
                if (text::trim(line).empty()) {
                    sink.get() << '\n';
                    continue;
                }
                sink.get() << mask_entities(Query(line), common).text << '\n';
            }
            return 0;
        }
        if (*augment_cmd) {
            InputSource src(aug_in, in);
            auto records = parse_dataset(src.get());
            auto result = augment_corpus(records, aug_seed, aug_lex.load());
            OutputSink sink(aug_out, out);
            write_dataset(sink.get(), records);
            write_dataset(sink.get(), result.generated);
            if (!aug_report.empty()) {
                OutputSink rep(aug_report, out);
                rep.get() << augment_report_to_json(result, aug_seed).dump(2) << '\n';
            }
            return 0;
        }
        if (*eval_cmd) {
            auto model = load_model(eval_ckpt);
            ModelDetector detector(model, eval_emb.make(model->embedder), eval_lex.load());
            InputSource src(eval_data, in);
            auto records = parse_dataset(src.get());
            std::vector<AmbiguityLabel> preds, gold;
            for (const auto& r : records) {
                if (!r.label) throw CliFailure{"data", "record \"" + r.id + "\" has no label"};
                preds.push_back(detector.detect(r.query).label);
                gold.push_back(*r.label);
            }
            out << report_to_json(classification_metrics(preds, gold)).dump() << '\n';
            return 0;
        }
        if (*compare_cmd) {
            auto model = load_model(cmp_ckpt);
            auto embedder = cmp_emb.make(model->embedder);
            ModelDetector detector(model, embedder, cmp_lex.load());
            std::unique_ptr<Rewriter> rewriter;
            if (!cmp_llm_url.empty()) {
                LlmClientConfig llm;
                llm.url = cmp_llm_url;
                llm.model = cmp_llm_model;
                llm.token_env = cmp_llm_token;
                rewriter = std::make_unique<LlmRewriter>(std::make_shared<HttpLlmClient>(llm));
            } else {
                rewriter = std::make_unique<MockRewriter>(cmp_table.empty() ? MockRewriter()
                                                                            : MockRewriter::from_file(cmp_table));
            }
            InputSource src(cmp_data, in);
            auto records = parse_dataset(src.get());
            auto reports = compare_frameworks(records, detector, *rewriter, *embedder);
            out << frameworks_table(reports);
            if (!cmp_report.empty()) {
                OutputSink rep(cmp_report, out);
                rep.get() << frameworks_to_json(reports).dump(2) << '\n';
            }
            return 0;
        }
        if (*serve_cmd) {
            auto config = load_service_config(serve_config);
            if (serve_port) config.port = *serve_port;
            if (serve_host) config.bind_address = *serve_host;
            Service service;
            service.serve(config);
            return 0;
        }
        if (*synth_cmd) {
            OutputSink sink(synth_out, out);
            if (synth_golden) {
                write_dataset(sink.get(), synthetic_rewrite_corpus(synth_clear, synth_amb, synth_seed));
            } else {
                write_dataset(sink.get(), synthetic_corpus({synth_clear, synth_amb, synth_seed}));
            }
            return 0;
        }
    } catch (const CliFailure& f) {
        report(err, f);
        return f.status;
    } catch (const DatasetError& e) {
        report(err, CliFailure{"data", e.what()});
        return 1;
    } catch (const CheckpointError& e) {
        report(err, CliFailure{"checkpoint", e.what()});
        return 1;
    } catch (const ConfigError& e) {
        report(err, CliFailure{"config", e.what()});
        return 1;
    } catch (const EmbedError& e) {
        report(err, CliFailure{e.retryable() ? "embedder_unavailable" : "embedder", e.what()});
        return 1;
    } catch (const std::exception& e) {
        report(err, CliFailure{"runtime", e.what()});
        return 1;
    }
    return 0;
}

}  // namespace qrouter
