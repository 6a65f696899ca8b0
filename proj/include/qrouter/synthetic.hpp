#pragma once

// Deterministic synthetic corpora for desk-scale training and for the
// routing/rewrite experiments: clear queries come from templates over a
// small data-platform vocabulary, ambiguous ones from the augmentation
// rules applied to them.

#include <cstdint>
#include <string>
#include <vector>

#include "qrouter/core.hpp"

namespace qrouter {

/// `count` distinct, fully specified queries (each names an entity type
/// and, mostly, a concrete entity). Throws if `count` exceeds the template
/// space.
std::vector<std::string> synthetic_clear_queries(std::size_t count, std::uint64_t seed);

struct SyntheticCorpusOptions {
    std::size_t clear_count = 2500;
    std::size_t ambiguous_count = 2500;
    std::uint64_t seed = 7;
};

/// Clear records plus ambiguous records produced by the omit-details,
/// referential and vague-statement rules. Shuffled deterministically.
std::vector<DatasetRecord> synthetic_corpus(const SyntheticCorpusOptions& options);

/// Same, but every record carries golden_rewrite: the query itself for
/// clear records, the clear source query for ambiguous ones. Ambiguous
/// records get a short history naming the entity.
std::vector<DatasetRecord> synthetic_rewrite_corpus(std::size_t clear_count, std::size_t ambiguous_count,
                                                    std::uint64_t seed);

struct CorpusSplits {
    std::vector<DatasetRecord> train;
    std::vector<DatasetRecord> validation;
    std::vector<DatasetRecord> test;
};

/// Shuffles and splits by fraction (remainder goes to test).
CorpusSplits split_corpus(std::vector<DatasetRecord> records, std::uint64_t seed, double train_fraction = 0.70,
                          double validation_fraction = 0.15);

}  // namespace qrouter
