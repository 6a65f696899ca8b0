#include "qrouter/checkpoint.hpp"

#include <openssl/evp.h>

#include <fstream>
#include <sstream>

#include "qrouter/json_io.hpp"

namespace qrouter {
namespace {

json matrix(const std::vector<double>& data, std::size_t rows, std::size_t cols) {
    return json{{"shape", {rows, cols}}, {"data", data}};
}

json vec(const std::vector<double>& data) {
    return json{{"shape", {data.size()}}, {"data", data}};
}

std::vector<double> read_array(const json& j, std::initializer_list<std::size_t> shape, const char* name) {
    const auto& s = j.at("shape");
    std::vector<std::size_t> expected(shape);
    if (s.get<std::vector<std::size_t>>() != expected) {
        throw CheckpointError(CheckpointError::Kind::corrupt, std::string("unexpected shape for ") + name);
    }
    auto data = j.at("data").get<std::vector<double>>();
    std::size_t n = 1;
    for (auto d : expected) n *= d;
    if (data.size() != n) throw CheckpointError(CheckpointError::Kind::corrupt, std::string("bad size for ") + name);
    return data;
}

json train_config_to_json(const TrainConfig& c) {
    return json{{"learning_rate", c.learning_rate}, {"batch_size", c.batch_size}, {"epochs", c.epochs},
                {"eval_every", c.eval_every},       {"seed", c.seed},             {"dropout_p", c.dropout_p},
                {"hidden", c.hidden},               {"threshold", c.threshold}};
}

TrainConfig train_config_from_json(const json& j) {
    TrainConfig c;
    c.learning_rate = j.at("learning_rate").get<double>();
    c.batch_size = j.at("batch_size").get<std::size_t>();
    c.epochs = j.at("epochs").get<std::size_t>();
    c.eval_every = j.at("eval_every").get<std::size_t>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.dropout_p = j.at("dropout_p").get<double>();
    c.hidden = j.at("hidden").get<std::size_t>();
    c.threshold = j.at("threshold").get<double>();
    return c;
}

}  // namespace

std::string sha256_hex(std::string_view bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx, bytes.data(), bytes.size()) != 1 || EVP_DigestFinal_ex(ctx, digest, &len) != 1) {
        EVP_MD_CTX_free(ctx);
        throw std::runtime_error("sha256 failed");
    }
    EVP_MD_CTX_free(ctx);
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xF]);
    }
    return out;
}

std::string save_checkpoint(const ClassifierModel& model) {
    model.check_consistency();
    const auto& h = model.head;
    json payload{
        {"format_version", kCheckpointFormatVersion},
        {"version", model.version},
        {"embedder", {{"kind", to_string(model.embedder.kind)}, {"dim", model.embedder.dim},
                      {"identity", model.embedder.identity}}},
        {"scaler", {{"median", model.scaler.median}, {"iqr", model.scaler.iqr}}},
        {"head", {{"input_dim", h.input_dim}, {"hidden", h.hidden}, {"dropout_p", h.dropout_p},
                  {"w1", matrix(h.w1, h.input_dim, h.hidden)}, {"b1", vec(h.b1)},
                  {"w2", matrix(h.w2, h.hidden, 2)}, {"b2", vec(h.b2)}}},
        {"threshold", model.threshold},
        {"train_config", train_config_to_json(model.train_config)},
    };
    json doc = payload;
    doc["checksum"] = "sha256:" + sha256_hex(payload.dump());
    return doc.dump() + "\n";
}

ClassifierModel load_checkpoint(std::string_view bytes) {
    json doc;
    try {
        doc = json::parse(bytes);
    } catch (const json::parse_error& e) {
        throw CheckpointError(CheckpointError::Kind::corrupt, std::string("checkpoint is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw CheckpointError(CheckpointError::Kind::corrupt, "checkpoint is not a JSON object");
    if (!doc.contains("format_version") || !doc["format_version"].is_string()) {
        throw CheckpointError(CheckpointError::Kind::corrupt, "checkpoint has no format_version");
    }
    const auto format = doc["format_version"].get<std::string>();
    if (format != kCheckpointFormatVersion) {
        throw CheckpointError(CheckpointError::Kind::unsupported_version,
                              "unsupported checkpoint format_version \"" + format + "\"");
    }
    if (!doc.contains("checksum") || !doc["checksum"].is_string()) {
        throw CheckpointError(CheckpointError::Kind::corrupt, "checkpoint has no checksum");
    }
    const auto stored = doc["checksum"].get<std::string>();
    doc.erase("checksum");
    if (stored != "sha256:" + sha256_hex(doc.dump())) {
        throw CheckpointError(CheckpointError::Kind::checksum, "checkpoint checksum mismatch");
    }

    try {
        ClassifierModel m;
        m.version = doc.at("version").get<std::string>();
        const auto& e = doc.at("embedder");
        m.embedder.kind = embedder_kind_from_string(e.at("kind").get<std::string>());
        m.embedder.dim = e.at("dim").get<std::size_t>();
        m.embedder.identity = e.at("identity").get<std::string>();
        m.scaler.median = doc.at("scaler").at("median").get<std::array<double, kNumFeatures>>();
        m.scaler.iqr = doc.at("scaler").at("iqr").get<std::array<double, kNumFeatures>>();

        const auto& h = doc.at("head");
        m.head.input_dim = h.at("input_dim").get<std::size_t>();
        m.head.hidden = h.at("hidden").get<std::size_t>();
        m.head.dropout_p = h.at("dropout_p").get<double>();
        m.head.w1 = read_array(h.at("w1"), {m.head.input_dim, m.head.hidden}, "w1");
        m.head.b1 = read_array(h.at("b1"), {m.head.hidden}, "b1");
        m.head.w2 = read_array(h.at("w2"), {m.head.hidden, 2}, "w2");
        m.head.b2 = read_array(h.at("b2"), {2}, "b2");
        m.threshold = doc.at("threshold").get<double>();
        m.train_config = train_config_from_json(doc.at("train_config"));
        try {
            m.check_consistency();
        } catch (const std::invalid_argument& ex) {
            throw CheckpointError(CheckpointError::Kind::dimension, ex.what());
        }
        return m;
    } catch (const json::exception& ex) {
        throw CheckpointError(CheckpointError::Kind::corrupt, std::string("malformed checkpoint: ") + ex.what());
    } catch (const std::invalid_argument& ex) {
        throw CheckpointError(CheckpointError::Kind::corrupt, std::string("malformed checkpoint: ") + ex.what());
    }
}

void save_checkpoint_file(const ClassifierModel& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw CheckpointError(CheckpointError::Kind::io, "cannot write " + path);
    out << save_checkpoint(model);
    if (!out) throw CheckpointError(CheckpointError::Kind::io, "write failed for " + path);
}

ClassifierModel load_checkpoint_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CheckpointError(CheckpointError::Kind::io, "cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return load_checkpoint(ss.str());
}

void check_embedder_compatible(const ClassifierModel& model, const EmbedderSpec& embedder) {
    if (embedder.dim != model.embedder.dim) {
        throw CheckpointError(CheckpointError::Kind::dimension,
                              "checkpoint expects " + std::to_string(model.embedder.dim) +
                                  "-dim embeddings, embedder produces " + std::to_string(embedder.dim));
    }
    if (embedder.kind != model.embedder.kind || embedder.identity != model.embedder.identity) {
        throw CheckpointError(CheckpointError::Kind::embedder,
                              "checkpoint was trained with embedder \"" + model.embedder.identity +
                                  "\", configured embedder is \"" + embedder.identity + "\"");
    }
}

}  // namespace qrouter
