// Checkpoint file: a plain-text manifest (version, model config, norm stats,
// parameter name/shape/offset table, training metadata) followed by raw
// little-endian 32-bit float parameter blocks in manifest order.
//
// Parameters are held as float32 in memory as well, so a save/load round
// trip reproduces forward outputs bit-identically in either precision mode.
#pragma once

#include <bit>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "xrid/error.hpp"
#include "xrid/model.hpp"
#include "xrid/sampling.hpp"
#include "xrid/tensor.hpp"

namespace xrid {

inline constexpr int kCheckpointVersion = 1;

struct ParamBlock {
    std::string name;
    std::vector<int> shape;
    std::vector<float> values;
};

struct TrainMeta {
    int epoch = 0;
    double val_min_accuracy = 0.0;
    double val_macro_accuracy = 0.0;
    std::uint64_t seed = 0;
};

struct Checkpoint {
    int version = kCheckpointVersion;
    ModelConfig config;
    NormStats norm;
    TrainMeta meta;
    std::vector<ParamBlock> params;
};

namespace detail {

inline std::string join_ints(const std::vector<int>& v, char sep) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += sep;
        s += std::to_string(v[i]);
    }
    return s;
}

inline std::vector<int> parse_int_list(const std::string& s, char sep) {
    std::vector<int> out;
    std::string token;
    std::istringstream in(s);
    while (std::getline(in, token, sep)) {
        if (token.empty()) continue;
        out.push_back(std::stoi(token));
    }
    return out;
}

inline std::string format_g17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline void write_f32_le(std::ostream& out, float v) {
    const std::uint32_t bits = std::bit_cast<std::uint32_t>(v);
    const unsigned char bytes[4] = {
        static_cast<unsigned char>(bits & 0xff),
        static_cast<unsigned char>((bits >> 8) & 0xff),
        static_cast<unsigned char>((bits >> 16) & 0xff),
        static_cast<unsigned char>((bits >> 24) & 0xff),
    };
    out.write(reinterpret_cast<const char*>(bytes), 4);
}

inline bool read_f32_le(std::istream& in, float& v) {
    unsigned char bytes[4];
    if (!in.read(reinterpret_cast<char*>(bytes), 4)) return false;
    const std::uint32_t bits = static_cast<std::uint32_t>(bytes[0]) |
                               (static_cast<std::uint32_t>(bytes[1]) << 8) |
                               (static_cast<std::uint32_t>(bytes[2]) << 16) |
                               (static_cast<std::uint32_t>(bytes[3]) << 24);
    v = std::bit_cast<float>(bits);
    return true;
}

inline std::string doubles_csv(const double* values, std::size_t n) {
    std::string s;
    for (std::size_t i = 0; i < n; ++i) {
        if (i) s += ',';
        s += format_g17(values[i]);
    }
    return s;
}

inline void parse_doubles_csv(const std::string& s, double* out, std::size_t n) {
    std::istringstream in(s);
    std::string token;
    std::size_t i = 0;
    while (std::getline(in, token, ',')) {
        if (i >= n) throw CheckpointError("too many values in stats row");
        out[i++] = std::stod(token);
    }
    if (i != n) throw CheckpointError("expected " + std::to_string(n) + " values, got " +
                                      std::to_string(i));
}

} // namespace detail

// Snapshot of model parameters, rounded to float32. Models hold parameters
// in the scalar type S; rounding here keeps disk and memory consistent.
template <typename S>
std::vector<ParamBlock> export_params(Model<S>& model) {
    std::vector<ParamBlock> blocks;
    for (const ParamRef<S>& ref : model.params()) {
        ParamBlock block;
        block.name = ref.name;
        block.shape = ref.tensor->shape;
        block.values.reserve(ref.tensor->size());
        for (const S& v : ref.tensor->values) block.values.push_back(static_cast<float>(v));
        blocks.push_back(std::move(block));
    }
    return blocks;
}

template <typename S>
void import_params(Model<S>& model, const std::vector<ParamBlock>& blocks) {
    auto refs = model.params();
    if (refs.size() != blocks.size()) {
        throw CheckpointError("parameter count mismatch: model has " +
                              std::to_string(refs.size()) + ", checkpoint has " +
                              std::to_string(blocks.size()));
    }
    for (std::size_t i = 0; i < refs.size(); ++i) {
        if (refs[i].name != blocks[i].name) {
            throw CheckpointError("parameter name mismatch: " + refs[i].name + " vs " +
                                  blocks[i].name);
        }
        if (refs[i].tensor->shape != blocks[i].shape) {
            throw CheckpointError("parameter shape mismatch for " + refs[i].name);
        }
        for (std::size_t k = 0; k < blocks[i].values.size(); ++k) {
            refs[i].tensor->values[k] = static_cast<S>(blocks[i].values[k]);
        }
    }
}

inline void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write checkpoint: " + path.string());
    const ModelConfig& cfg = ckpt.config;
    out << "xrid-checkpoint " << ckpt.version << '\n';
    out << "architecture=" << to_string(cfg.architecture) << '\n';
    out << "encoding=" << to_string(cfg.encoding) << '\n';
    out << "class_count=" << cfg.class_count << '\n';
    out << "gru_hidden=" << cfg.gru_hidden << '\n';
    out << "gru_layers=" << cfg.gru_layers << '\n';
    out << "gru_dropout=" << detail::format_g17(cfg.gru_dropout) << '\n';
    out << "cnn_kernel=" << cfg.cnn_kernel << '\n';
    out << "cnn_channels=" << detail::join_ints(cfg.cnn_channels, ',') << '\n';
    out << "cnn_dropout=" << detail::format_g17(cfg.cnn_dropout) << '\n';
    out << "learning_rate=" << detail::format_g17(cfg.learning_rate) << '\n';
    out << "window_length=" << cfg.window_length << '\n';
    out << "feature_count=" << cfg.feature_count << '\n';
    out << "norm_enabled=" << (ckpt.norm.enabled ? 1 : 0) << '\n';
    out << "norm_mean=" << detail::doubles_csv(ckpt.norm.mean.data(), kFeatureCount) << '\n';
    out << "norm_stddev=" << detail::doubles_csv(ckpt.norm.stddev.data(), kFeatureCount) << '\n';
    out << "meta_epoch=" << ckpt.meta.epoch << '\n';
    out << "meta_val_min_accuracy=" << detail::format_g17(ckpt.meta.val_min_accuracy) << '\n';
    out << "meta_val_macro_accuracy=" << detail::format_g17(ckpt.meta.val_macro_accuracy) << '\n';
    out << "meta_seed=" << ckpt.meta.seed << '\n';
    out << "params=" << ckpt.params.size() << '\n';
    std::size_t offset = 0;
    for (const ParamBlock& block : ckpt.params) {
        out << "param " << block.name << ' ' << detail::join_ints(block.shape, ',') << ' '
            << offset << '\n';
        offset += block.values.size();
    }
    out << "data " << offset << '\n';
    for (const ParamBlock& block : ckpt.params) {
        for (float v : block.values) detail::write_f32_le(out, v);
    }
    if (!out) throw IoError("write failed: " + path.string());
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint: " + path.string());

    std::string line;
    if (!std::getline(in, line)) throw CheckpointError("empty checkpoint file");
    {
        std::istringstream head(line);
        std::string magic;
        int version = -1;
        head >> magic >> version;
        if (magic != "xrid-checkpoint") throw CheckpointError("not a checkpoint file");
        if (version != kCheckpointVersion) {
            throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
        }
    }

    Checkpoint ckpt;
    ModelConfig& cfg = ckpt.config;
    std::size_t declared_params = 0;
    bool saw_params_count = false;
    std::vector<std::size_t> offsets;
    std::size_t expected_total = 0;

    while (std::getline(in, line)) {
        if (line.rfind("param ", 0) == 0) {
            std::istringstream row(line);
            std::string tag;
            ParamBlock block;
            std::string shape_str;
            std::size_t offset = 0;
            row >> tag >> block.name >> shape_str >> offset;
            if (block.name.empty()) throw CheckpointError("malformed param row: " + line);
            block.shape = detail::parse_int_list(shape_str, ',');
            offsets.push_back(offset);
            ckpt.params.push_back(std::move(block));
            continue;
        }
        if (line.rfind("data ", 0) == 0) {
            expected_total = std::stoull(line.substr(5));
            break;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw CheckpointError("malformed manifest line: " + line);
        const std::string key = line.substr(0, eq);
        const std::string value = line.substr(eq + 1);
        if (key == "architecture") cfg.architecture = parse_architecture(value);
        else if (key == "encoding") cfg.encoding = parse_encoding(value);
        else if (key == "class_count") cfg.class_count = std::stoi(value);
        else if (key == "gru_hidden") cfg.gru_hidden = std::stoi(value);
        else if (key == "gru_layers") cfg.gru_layers = std::stoi(value);
        else if (key == "gru_dropout") cfg.gru_dropout = std::stod(value);
        else if (key == "cnn_kernel") cfg.cnn_kernel = std::stoi(value);
        else if (key == "cnn_channels") cfg.cnn_channels = detail::parse_int_list(value, ',');
        else if (key == "cnn_dropout") cfg.cnn_dropout = std::stod(value);
        else if (key == "learning_rate") cfg.learning_rate = std::stod(value);
        else if (key == "window_length") cfg.window_length = std::stoi(value);
        else if (key == "feature_count") cfg.feature_count = std::stoi(value);
        else if (key == "norm_enabled") ckpt.norm.enabled = value != "0";
        else if (key == "norm_mean") detail::parse_doubles_csv(value, ckpt.norm.mean.data(), kFeatureCount);
        else if (key == "norm_stddev") detail::parse_doubles_csv(value, ckpt.norm.stddev.data(), kFeatureCount);
        else if (key == "meta_epoch") ckpt.meta.epoch = std::stoi(value);
        else if (key == "meta_val_min_accuracy") ckpt.meta.val_min_accuracy = std::stod(value);
        else if (key == "meta_val_macro_accuracy") ckpt.meta.val_macro_accuracy = std::stod(value);
        else if (key == "meta_seed") ckpt.meta.seed = std::stoull(value);
        else if (key == "params") {
            declared_params = std::stoull(value);
            saw_params_count = true;
        } else {
            throw CheckpointError("unknown manifest key: " + key);
        }
    }

    if (!saw_params_count || declared_params != ckpt.params.size()) {
        throw CheckpointError("parameter table does not match declared count");
    }

    std::size_t offset = 0;
    for (std::size_t i = 0; i < ckpt.params.size(); ++i) {
        if (offsets[i] != offset) throw CheckpointError("offset table corrupt");
        offset += Tensor<float>::count(ckpt.params[i].shape);
    }
    if (offset != expected_total) throw CheckpointError("data size does not match offset table");

    for (ParamBlock& block : ckpt.params) {
        const std::size_t n = Tensor<float>::count(block.shape);
        block.values.resize(n);
        for (std::size_t k = 0; k < n; ++k) {
            if (!detail::read_f32_le(in, block.values[k])) {
                throw CheckpointError("truncated parameter block: " + block.name);
            }
        }
    }
    return ckpt;
}

// Builds a model in scalar type S from a checkpoint.
template <typename S>
std::unique_ptr<Model<S>> restore_model(const Checkpoint& ckpt) {
    auto model = build_model<S>(ckpt.config);
    import_params(*model, ckpt.params);
    return model;
}

} // namespace xrid
