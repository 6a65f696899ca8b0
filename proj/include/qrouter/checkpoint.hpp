#pragma once

// Single-file JSON checkpoint: format version, embedder identity, scaler,
// head weights as flat arrays with shapes, threshold, training config and a
// SHA-256 checksum over the canonical payload.

#include <stdexcept>
#include <string>
#include <string_view>

#include "qrouter/classifier.hpp"

namespace qrouter {

inline constexpr std::string_view kCheckpointFormatVersion = "1";

class CheckpointError : public std::runtime_error {
public:
    enum class Kind { corrupt, checksum, unsupported_version, dimension, embedder, io };

    CheckpointError(Kind kind, const std::string& message) : std::runtime_error(message), kind_(kind) {}
    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

std::string save_checkpoint(const ClassifierModel& model);
ClassifierModel load_checkpoint(std::string_view bytes);

void save_checkpoint_file(const ClassifierModel& model, const std::string& path);
ClassifierModel load_checkpoint_file(const std::string& path);

/// Throws CheckpointError(dimension) on a width mismatch and
/// CheckpointError(embedder) when kind or identity differ.
void check_embedder_compatible(const ClassifierModel& model, const EmbedderSpec& embedder);

std::string sha256_hex(std::string_view bytes);

}  // namespace qrouter
