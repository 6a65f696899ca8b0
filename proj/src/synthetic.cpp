#include "qrouter/synthetic.hpp"

#include <algorithm>
#include <random>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "qrouter/augment.hpp"

namespace qrouter {
namespace {

// Types that appear next to a concrete entity; kept in step with the default
// entity-type lexicon so clear queries never trip the lexical override.
const std::vector<std::string> kEntityTypes{"segment", "dataset", "schema", "audience"};

const std::vector<std::string> kTypes{"segment", "dataset", "schema",  "audience", "destination",
                                      "journey", "workflow", "sandbox", "report",  "campaign"};

const std::vector<std::string> kNames{
    "'Holiday Shoppers'", "'Loyalty Members'",  "'ABC Dataset'",      "'Spring Promo 2024'", "'Churn Risk'",
    "'Web Visitors EU'",  "ds_1042",            "seg_7781",           "crm_contacts.v2",     "orders-2023",
    "aud_0042",           "\"Gold Tier\"",      "\"Cart Abandoners\"", "prod_events_01",      "'Trial Users'",
    "'High Value Buyers'", "'Newsletter Opt-In'", "web_sessions_v3",   "sch-4471",            "'Lapsed Customers'",
    "\"Mobile App Users\"", "evt_2024_q1",       "'Store Visitors'",   "ds-analytics-02",     "'VIP Program'",
    "loyalty.tiers.v1",   "'Black Friday 2023'", "aud_9107",          "\"Email Openers\"",    "'Free Trial EU'"};

const std::vector<std::string> kAttrs{"size",          "owner",         "creation date", "description",
                                      "profile count", "refresh schedule", "status",     "primary identity"};

const std::vector<std::string> kProducts{"the analytics workspace", "the data platform", "the campaign tool"};

// Templates naming a concrete entity.
const std::vector<std::string> kEntityTemplates{
    "What is the {attr} of the {type} {name}?",
    "Who is the owner of the {type} {name}?",
    "When was the {type} {name} last updated?",
    "How many profiles are in the {type} {name}?",
    "Show me the {attr} of the {type} {name}",
    "Tell me about the {type} {name}",
    "Give me the {attr} of {type} {name}",
    "List the fields of the {type} {name}",
    "Delete the {type} {name}",
    "Can I export the {type} {name} to a CSV file?",
    "Why did the {type} {name} fail to refresh yesterday?",
    "Is the {type} {name} shared with my team?",
    "Describe the {type} {name} in detail",
    "Find the {type} named {name}",
    "Rename the {type} {name} to {name2}",
    "Compare the {type} {name} with the {type} {name2}",
};

// General, entity-free templates that still name a type.
const std::vector<std::string> kGeneralTemplates{
    "What is a {type}?",
    "How do I create a new {type} in {product}?",
    "Explain how a {type} is evaluated in {product}",
    "How many {type}s do I have in {product}?",
    "List all {type}s created last week",
    "What permissions are needed to edit a {type}?",
    "How can I share a {type} with another team?",
    "Create a new {type} for customers in Canada",
    "Where can I find the list of archived {type}s?",
    "Which {type}s were modified by my team this month?",
};

std::string replace_all(std::string s, const std::string& from, const std::string& to) {
    std::size_t pos = 0;
    while ((pos = s.find(from, pos)) != std::string::npos) {
        s.replace(pos, from.size(), to);
        pos += to.size();
    }
    return s;
}

std::vector<std::string> all_clear_queries() {
    std::vector<std::string> out;
    for (const auto& tmpl : kGeneralTemplates) {
        for (const auto& type : kTypes) {
            for (const auto& product : kProducts) {
                auto s = replace_all(replace_all(tmpl, "{type}", type), "{product}", product);
                out.push_back(std::move(s));
            }
        }
    }
    for (const auto& tmpl : kEntityTemplates) {
        const bool has_attr = tmpl.find("{attr}") != std::string::npos;
        for (const auto& type : kEntityTypes) {
            for (std::size_t n = 0; n < kNames.size(); ++n) {
                const auto& name2 = kNames[(n + 5) % kNames.size()];
                for (std::size_t a = 0; a < (has_attr ? kAttrs.size() : 1); ++a) {
                    auto s = replace_all(tmpl, "{type}", type);
                    s = replace_all(s, "{attr}", kAttrs[a]);
                    s = replace_all(s, "{name2}", name2);
                    s = replace_all(s, "{name}", kNames[n]);
                    out.push_back(std::move(s));
                }
            }
        }
    }
    std::unordered_set<std::string> seen;
    std::vector<std::string> unique;
    for (auto& s : out) {
        if (seen.insert(s).second) unique.push_back(std::move(s));
    }
    return unique;
}

}  // namespace

std::vector<std::string> synthetic_clear_queries(std::size_t count, std::uint64_t seed) {
    auto all = all_clear_queries();
    if (count > all.size()) {
        throw std::invalid_argument("requested " + std::to_string(count) + " clear queries, template space has " +
                                    std::to_string(all.size()));
    }
    Rng rng(seed);
    std::shuffle(all.begin(), all.end(), rng);
    all.resize(count);
    return all;
}

namespace {

struct Generated {
    std::vector<DatasetRecord> clear;
    std::vector<DatasetRecord> ambiguous;
    std::unordered_map<std::string, std::string> source_text;  // ambiguous id -> clear source text
};

Generated generate(std::size_t clear_count, std::size_t ambiguous_count, std::uint64_t seed) {
    Generated g;
    const auto texts = synthetic_clear_queries(clear_count, seed);
    for (std::size_t i = 0; i < texts.size(); ++i) {
        char id[32];
        std::snprintf(id, sizeof id, "c%05zu", i);
        g.clear.push_back(DatasetRecord{id, Query(texts[i]), AmbiguityLabel::clear, {}, std::nullopt});
    }

    auto augmented = augment_corpus(g.clear, seed);
    std::unordered_map<std::string, std::string> by_id;
    for (const auto& r : g.clear) by_id.emplace(r.id, r.query.text());

    std::vector<DatasetRecord> pool;
    for (auto& r : augmented.generated) {
        // Entity-type removal is caught by the lexical override, not the head.
        if (r.id.find(std::string("#") + std::string(to_string(AugmentRule::remove_entity_type))) !=
            std::string::npos) {
            continue;
        }
        const std::string source_id = r.id.substr(0, r.id.find('#'));
        g.source_text.emplace(r.id, by_id.at(source_id));
        pool.push_back(std::move(r));
    }
    if (pool.size() < ambiguous_count) {
        throw std::invalid_argument("augmentation produced " + std::to_string(pool.size()) +
                                    " ambiguous queries, fewer than requested " + std::to_string(ambiguous_count));
    }
    Rng rng(seed ^ 0xA5A5A5A5ULL);
    std::shuffle(pool.begin(), pool.end(), rng);
    pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(ambiguous_count), pool.end());
    g.ambiguous = std::move(pool);
    return g;
}

}  // namespace

std::vector<DatasetRecord> synthetic_corpus(const SyntheticCorpusOptions& options) {
    auto g = generate(options.clear_count, options.ambiguous_count, options.seed);
    std::vector<DatasetRecord> all = std::move(g.clear);
    for (auto& r : g.ambiguous) all.push_back(std::move(r));
    Rng rng(options.seed + 1);
    std::shuffle(all.begin(), all.end(), rng);
    return all;
}

std::vector<DatasetRecord> synthetic_rewrite_corpus(std::size_t clear_count, std::size_t ambiguous_count,
                                                    std::uint64_t seed) {
    auto g = generate(clear_count, ambiguous_count, seed);
    std::vector<DatasetRecord> all;
    for (auto& r : g.clear) {
        r.golden_rewrite = r.query.text();
        all.push_back(std::move(r));
    }
    for (auto& r : g.ambiguous) {
        const std::string& source = g.source_text.at(r.id);
        r.golden_rewrite = source;
        r.history = {ChatTurn{Role::user, source}, ChatTurn{Role::assistant, "Here is what I found."}};
        all.push_back(std::move(r));
    }
    Rng rng(seed + 2);
    std::shuffle(all.begin(), all.end(), rng);
    return all;
}

CorpusSplits split_corpus(std::vector<DatasetRecord> records, std::uint64_t seed, double train_fraction,
                          double validation_fraction) {
    if (train_fraction < 0 || validation_fraction < 0 || train_fraction + validation_fraction > 1.0) {
        throw std::invalid_argument("split fractions must be non-negative and sum to at most 1");
    }
    Rng rng(seed);
    std::shuffle(records.begin(), records.end(), rng);
    const auto n = records.size();
    const auto n_train = static_cast<std::size_t>(static_cast<double>(n) * train_fraction);
    const auto n_val = static_cast<std::size_t>(static_cast<double>(n) * validation_fraction);
    CorpusSplits s;
    auto it = records.begin();
    s.train.assign(std::make_move_iterator(it), std::make_move_iterator(it + static_cast<std::ptrdiff_t>(n_train)));
    it += static_cast<std::ptrdiff_t>(n_train);
    s.validation.assign(std::make_move_iterator(it), std::make_move_iterator(it + static_cast<std::ptrdiff_t>(n_val)));
    it += static_cast<std::ptrdiff_t>(n_val);
    s.test.assign(std::make_move_iterator(it), std::make_move_iterator(records.end()));
    return s;
}

}  // namespace qrouter
