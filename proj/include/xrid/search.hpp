// Random hyperparameter search over the benchmark's search spaces: uniform
// draws for structural parameters, log-uniform for the learning rate,
// selection by validation minimum accuracy with ties going to the earliest
// run.
#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "xrid/error.hpp"
#include "xrid/model.hpp"
#include "xrid/rng.hpp"

namespace xrid {

struct SearchSpace {
    // GRU
    int gru_hidden_min = 20, gru_hidden_max = 450;
    int gru_layers_min = 1, gru_layers_max = 8;
    // CNN
    int cnn_kernel_min = 2, cnn_kernel_max = 9;
    int cnn_layers_min = 1, cnn_layers_max = 8;
    int cnn_channels_min = 10, cnn_channels_max = 500;
    // Shared
    double dropout_min = 0.0, dropout_max = 0.6;
    double lr_min = 1e-4, lr_max = 1e-2;
};

struct SearchRun {
    ModelConfig config;
    double score = 0.0; // validation minimum accuracy
};

struct SearchResult {
    ModelConfig best;
    std::size_t best_index = 0;
    std::vector<SearchRun> runs;
};

inline ModelConfig sample_config(Architecture arch, EncodingKind encoding, int class_count,
                                 const SearchSpace& space, Rng& rng) {
    ModelConfig cfg;
    cfg.architecture = arch;
    cfg.encoding = encoding;
    cfg.class_count = class_count;
    if (arch == Architecture::GRU) {
        cfg.gru_hidden = static_cast<int>(rng.uniform_int(space.gru_hidden_min, space.gru_hidden_max));
        cfg.gru_layers = static_cast<int>(rng.uniform_int(space.gru_layers_min, space.gru_layers_max));
        cfg.gru_dropout = rng.uniform(space.dropout_min, space.dropout_max);
    } else {
        cfg.cnn_kernel = static_cast<int>(rng.uniform_int(space.cnn_kernel_min, space.cnn_kernel_max));
        const int layers =
            static_cast<int>(rng.uniform_int(space.cnn_layers_min, space.cnn_layers_max));
        cfg.cnn_channels.clear();
        for (int l = 0; l < layers; ++l) {
            cfg.cnn_channels.push_back(
                static_cast<int>(rng.uniform_int(space.cnn_channels_min, space.cnn_channels_max)));
        }
        cfg.cnn_dropout = rng.uniform(space.dropout_min, space.dropout_max);
    }
    cfg.learning_rate = rng.log_uniform(space.lr_min, space.lr_max);
    return cfg;
}

// evaluate(config) must return the validation minimum accuracy of a model
// trained with that configuration.
inline SearchResult random_search(Architecture arch, EncodingKind encoding, int class_count,
                                  const SearchSpace& space, int budget, std::uint64_t seed,
                                  const std::function<double(const ModelConfig&)>& evaluate) {
    if (budget < 1) throw ParameterError("search budget must be >= 1");
    Rng rng(derive_seed(seed, 0x5ea4c4));
    SearchResult result;
    for (int i = 0; i < budget; ++i) {
        SearchRun run;
        run.config = sample_config(arch, encoding, class_count, space, rng);
        run.score = evaluate(run.config);
        result.runs.push_back(run);
        if (run.score > result.runs[result.best_index].score) {
            result.best_index = static_cast<std::size_t>(i);
        }
    }
    result.best = result.runs[result.best_index].config;
    return result;
}

} // namespace xrid
