// Central finite-difference verification of the analytic gradients, run in
// double precision. 'Relative error' uses max(|analytic|, |numeric|, 1e-6)
// in the denominator so vanishing gradients are compared on an absolute
// scale matching the finite-difference noise floor.
#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "xrid/loss.hpp"
#include "xrid/model.hpp"
#include "xrid/rng.hpp"
#include "xrid/tensor.hpp"

namespace xrid {

struct GradCheckResult {
    double max_rel_error = 0.0;
    std::string worst_param;
    std::size_t probes = 0;
};

// Checks d loss / d theta for a seeded random input batch against central
// differences. probes_per_tensor = 0 probes every scalar.
inline GradCheckResult gradcheck_model(const ModelConfig& config, int batch_size,
                                       std::size_t probes_per_tensor = 0,
                                       std::uint64_t seed = 7, double h = 1e-5) {
    auto model = build_model<double>(config);
    Rng rng(derive_seed(seed, 11));
    model->init_params(rng);

    Tensor<double> input({batch_size, config.window_length, config.feature_count});
    for (double& v : input.values) v = rng.normal();
    std::vector<int> labels(static_cast<std::size_t>(batch_size));
    for (int& l : labels) l = static_cast<int>(rng.uniform_int(0, config.class_count - 1));

    auto loss_of = [&]() {
        const Tensor<double> logits = model->forward(input, /*training=*/false, nullptr);
        return cross_entropy(logits, labels).loss;
    };

    // Analytic gradients.
    {
        const Tensor<double> logits = model->forward(input, /*training=*/false, nullptr);
        LossResult<double> loss = cross_entropy(logits, labels);
        model->zero_grads();
        model->backward(loss.dlogits);
    }
    auto params = model->params();
    std::vector<std::vector<double>> analytic;
    analytic.reserve(params.size());
    for (auto& p : params) {
        analytic.emplace_back(p.tensor->grad.begin(), p.tensor->grad.end());
    }

    GradCheckResult result;
    Rng probe_rng(derive_seed(seed, 12));
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        Tensor<double>& tensor = *params[pi].tensor;
        std::vector<std::size_t> indices;
        if (probes_per_tensor == 0 || tensor.size() <= probes_per_tensor) {
            indices.resize(tensor.size());
            for (std::size_t k = 0; k < tensor.size(); ++k) indices[k] = k;
        } else {
            for (std::size_t k = 0; k < probes_per_tensor; ++k) {
                indices.push_back(static_cast<std::size_t>(
                    probe_rng.uniform_int(0, static_cast<std::int64_t>(tensor.size()) - 1)));
            }
        }
        for (std::size_t k : indices) {
            const double saved = tensor.values[k];
            tensor.values[k] = saved + h;
            const double loss_plus = loss_of();
            tensor.values[k] = saved - h;
            const double loss_minus = loss_of();
            tensor.values[k] = saved;
            const double numeric = (loss_plus - loss_minus) / (2.0 * h);
            const double a = analytic[pi][k];
            const double rel = std::abs(a - numeric) /
                               std::max({std::abs(a), std::abs(numeric), 1e-6});
            ++result.probes;
            if (rel > result.max_rel_error) {
                result.max_rel_error = rel;
                result.worst_param = params[pi].name + "[" + std::to_string(k) + "]";
            }
        }
    }
    return result;
}

// The two reference configurations exercised by the verification suite.
inline std::vector<ModelConfig> gradcheck_configs() {
    ModelConfig gru;
    gru.architecture = Architecture::GRU;
    gru.encoding = EncodingKind::BRA;
    gru.class_count = 5;
    gru.gru_hidden = 8;
    gru.gru_layers = 2;
    gru.gru_dropout = 0.0;
    gru.window_length = 12;
    gru.feature_count = 18;
    gru.learning_rate = 0.001;

    ModelConfig cnn;
    cnn.architecture = Architecture::CNN;
    cnn.encoding = EncodingKind::BRA;
    cnn.class_count = 5;
    cnn.cnn_kernel = 3;
    cnn.cnn_channels = {8, 16};
    cnn.cnn_dropout = 0.0;
    cnn.window_length = 12;
    cnn.feature_count = 18;
    cnn.learning_rate = 0.001;

    return {gru, cnn};
}

} // namespace xrid
