// Categorical cross-entropy over logits, with max-subtraction stability.
#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "xrid/error.hpp"
#include "xrid/tensor.hpp"

namespace xrid {

// Softmax of one logit row; numerically stable, sums to 1.
template <typename S>
inline void softmax_row(const S* logits, int classes, double* probs) {
    double max_logit = static_cast<double>(logits[0]);
    for (int c = 1; c < classes; ++c) {
        max_logit = std::max(max_logit, static_cast<double>(logits[c]));
    }
    double sum = 0.0;
    for (int c = 0; c < classes; ++c) {
        probs[c] = std::exp(static_cast<double>(logits[c]) - max_logit);
        sum += probs[c];
    }
    for (int c = 0; c < classes; ++c) probs[c] /= sum;
}

template <typename S>
struct LossResult {
    double loss = 0.0;    // mean over the batch
    Tensor<S> dlogits;    // (softmax - onehot) / batch
};

template <typename S>
LossResult<S> cross_entropy(const Tensor<S>& logits, const std::vector<int>& labels) {
    if (logits.shape.size() != 2) throw ShapeError("cross_entropy expects [batch, classes]");
    const int batch = logits.dim(0);
    const int classes = logits.dim(1);
    if (static_cast<std::size_t>(batch) != labels.size()) {
        throw ShapeError("label count " + std::to_string(labels.size()) +
                         " does not match batch " + std::to_string(batch));
    }

    LossResult<S> result;
    result.dlogits = Tensor<S>({batch, classes});
    std::vector<double> probs(static_cast<std::size_t>(classes));
    double total = 0.0;
    const double inv_batch = 1.0 / static_cast<double>(batch);
    for (int b = 0; b < batch; ++b) {
        const int label = labels[static_cast<std::size_t>(b)];
        if (label < 0 || label >= classes) {
            throw LabelError("label " + std::to_string(label) + " out of range [0," +
                             std::to_string(classes) + ")");
        }
        const S* row = logits.data() + static_cast<std::size_t>(b) * classes;
        softmax_row(row, classes, probs.data());
        // -log p via the stable identity log p = (x - max) - log sum, but the
        // normalized prob is already safe to log given the max subtraction.
        total += -std::log(std::max(probs[static_cast<std::size_t>(label)], 1e-300));
        S* drow = result.dlogits.data() + static_cast<std::size_t>(b) * classes;
        for (int c = 0; c < classes; ++c) {
            double g = probs[static_cast<std::size_t>(c)] * inv_batch;
            if (c == label) g -= inv_batch;
            drow[c] = static_cast<S>(g);
        }
    }
    result.loss = total * inv_batch;
    return result;
}

} // namespace xrid
