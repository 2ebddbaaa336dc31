// Sliding-window majority voting: every stride-1 window casts one vote for
// its argmax class; ties break by cumulative softmax probability, then by
// the lowest class index.
#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "xrid/error.hpp"
#include "xrid/loss.hpp"
#include "xrid/model.hpp"
#include "xrid/sampling.hpp"
#include "xrid/train.hpp"

namespace xrid {

struct VoteResult {
    int predicted = -1;
    std::vector<int> vote_counts;
    std::vector<double> cumulative_prob;
    int window_count = 0;
};

// Pure vote aggregation over per-window class probabilities; the model-free
// core of identify_segment, shared with tests.
inline VoteResult aggregate_votes(const std::vector<std::vector<double>>& window_probs) {
    if (window_probs.empty()) throw ParameterError("cannot aggregate zero windows");
    const std::size_t classes = window_probs.front().size();
    VoteResult result;
    result.vote_counts.assign(classes, 0);
    result.cumulative_prob.assign(classes, 0.0);
    result.window_count = static_cast<int>(window_probs.size());
    for (const auto& probs : window_probs) {
        if (probs.size() != classes) throw ShapeError("ragged probability rows");
        std::size_t arg = 0;
        for (std::size_t c = 1; c < classes; ++c) {
            if (probs[c] > probs[arg]) arg = c;
        }
        ++result.vote_counts[arg];
        for (std::size_t c = 0; c < classes; ++c) result.cumulative_prob[c] += probs[c];
    }
    std::size_t best = 0;
    for (std::size_t c = 1; c < classes; ++c) {
        if (result.vote_counts[c] > result.vote_counts[best] ||
            (result.vote_counts[c] == result.vote_counts[best] &&
             result.cumulative_prob[c] > result.cumulative_prob[best])) {
            best = c;
        }
    }
    result.predicted = static_cast<int>(best);
    return result;
}

// Evaluates the model on every stride-1 window of the segment (dropout off)
// and aggregates the votes.
template <typename S>
VoteResult identify_segment(Model<S>& model, const NormStats& norm, const SequenceSlice& segment,
                            const WindowSpec& window_spec, int batch_size = 256) {
    WindowSpec spec = window_spec;
    spec.stride_frames = 1;
    const std::vector<WindowRef> refs = windows(segment, spec);
    if (refs.empty()) {
        throw TooShortError("segment has " + std::to_string(segment.size()) +
                            " frames, need at least " + std::to_string(spec.length_frames));
    }
    const int classes = model.config().class_count;
    std::vector<std::vector<double>> probs;
    probs.reserve(refs.size());
    std::vector<double> row(static_cast<std::size_t>(classes));
    for (std::size_t begin = 0; begin < refs.size(); begin += static_cast<std::size_t>(batch_size)) {
        const std::size_t end = std::min(refs.size(), begin + static_cast<std::size_t>(batch_size));
        const Tensor<S> input = assemble_batch<S>(refs, begin, end, spec, norm, nullptr);
        const Tensor<S> logits = model.forward(input, /*training=*/false, nullptr);
        for (int b = 0; b < logits.dim(0); ++b) {
            softmax_row(logits.data() + static_cast<std::size_t>(b) * classes, classes, row.data());
            probs.push_back(row);
        }
    }
    return aggregate_votes(probs);
}

} // namespace xrid
