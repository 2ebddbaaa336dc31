// Training loop: shuffled mini-batches, Adam, per-epoch validation of the
// minimum per-class accuracy, early stopping with patience after a minimum
// epoch count, snapshot of the best epoch. Deterministic given the seed.
#pragma once

#include <cmath>
#include <cstddef>
#include <cstdio>
#include <string>
#include <vector>

#include "xrid/adam.hpp"
#include "xrid/checkpoint.hpp"
#include "xrid/error.hpp"
#include "xrid/loss.hpp"
#include "xrid/model.hpp"
#include "xrid/rng.hpp"
#include "xrid/sampling.hpp"
#include "xrid/tensor.hpp"

namespace xrid {

struct TrainOptions {
    int epochs_min = 30;
    int max_epochs = 1000;
    int patience = 10;
    double min_improvement = 1e-3; // below this an epoch counts as stagnation
    int batch_size = 256;
    int train_stride = 15; // one training window per second at 15 Hz
    int val_stride = 15;
    bool normalize = true;
    std::uint64_t seed = 0;
    bool verbose = false;
};

struct EpochStats {
    int epoch = 0;
    double train_loss = 0.0;
    double val_macro = 0.0;
    double val_min = 0.0;
};

struct TrainResult {
    Checkpoint checkpoint;
    std::vector<EpochStats> history;
    int best_epoch = 0;
    int stopped_epoch = 0;
};

// Stop bookkeeping: the snapshot follows any strict improvement of the
// monitored score; stopping waits for `patience` epochs without a
// significant (>= min_improvement) improvement, never before epochs_min.
class EarlyStopMonitor {
public:
    EarlyStopMonitor(int epochs_min, int patience, double min_improvement)
        : epochs_min_(epochs_min), patience_(patience), min_improvement_(min_improvement) {}

    bool observe(int epoch, double score) {
        const bool snapshot = score > best_score_;
        if (snapshot) {
            best_score_ = score;
            best_epoch_ = epoch;
        }
        if (score > significant_score_ + min_improvement_ || significant_epoch_ == 0) {
            if (score > significant_score_) significant_score_ = score;
            significant_epoch_ = epoch;
        }
        return snapshot;
    }

    bool should_stop(int epoch) const {
        return epoch >= epochs_min_ && (epoch - significant_epoch_) >= patience_;
    }

    int best_epoch() const { return best_epoch_; }
    double best_score() const { return best_score_; }

private:
    int epochs_min_;
    int patience_;
    double min_improvement_;
    double best_score_ = -1.0;
    int best_epoch_ = 0;
    double significant_score_ = -1.0;
    int significant_epoch_ = 0;
};

// Copies window frames into a [B, length, features] batch, applying the
// z-score transform on the fly.
template <typename S>
Tensor<S> assemble_batch(const std::vector<WindowRef>& refs, std::size_t begin, std::size_t end,
                         const WindowSpec& spec, const NormStats& norm,
                         std::vector<int>* labels_out = nullptr) {
    const int batch = static_cast<int>(end - begin);
    const int length = spec.length_frames;
    Tensor<S> input({batch, length, static_cast<int>(kFeatureCount)});
    if (labels_out) labels_out->resize(static_cast<std::size_t>(batch));
    for (int b = 0; b < batch; ++b) {
        const WindowRef& ref = refs[begin + static_cast<std::size_t>(b)];
        if (labels_out) (*labels_out)[static_cast<std::size_t>(b)] = ref.label;
        S* row = input.data() +
                 static_cast<std::size_t>(b) * static_cast<std::size_t>(length) * kFeatureCount;
        for (int t = 0; t < length; ++t) {
            const auto& values = ref.sequence->frames[ref.start + static_cast<std::size_t>(t)].values;
            for (std::size_t k = 0; k < kFeatureCount; ++k) {
                double v = values[k];
                if (norm.enabled) v = (v - norm.mean[k]) / norm.stddev[k];
                row[static_cast<std::size_t>(t) * kFeatureCount + k] = static_cast<S>(v);
            }
        }
    }
    return input;
}

struct WindowEval {
    std::vector<std::size_t> correct; // per class
    std::vector<std::size_t> total;   // per class
    double macro_accuracy = 0.0;      // over classes with at least one window
    double min_accuracy = 0.0;
};

// Dropout-off forward over all windows; argmax prediction per window.
template <typename S>
WindowEval evaluate_windows(Model<S>& model, const std::vector<WindowRef>& refs,
                            const WindowSpec& spec, const NormStats& norm, int batch_size) {
    const int classes = model.config().class_count;
    WindowEval eval;
    eval.correct.assign(static_cast<std::size_t>(classes), 0);
    eval.total.assign(static_cast<std::size_t>(classes), 0);

    std::vector<int> labels;
    for (std::size_t begin = 0; begin < refs.size(); begin += static_cast<std::size_t>(batch_size)) {
        const std::size_t end = std::min(refs.size(), begin + static_cast<std::size_t>(batch_size));
        const Tensor<S> input = assemble_batch<S>(refs, begin, end, spec, norm, &labels);
        const Tensor<S> logits = model.forward(input, /*training=*/false, nullptr);
        const int batch = logits.dim(0);
        for (int b = 0; b < batch; ++b) {
            const S* row = logits.data() + static_cast<std::size_t>(b) * classes;
            int arg = 0;
            for (int c = 1; c < classes; ++c) {
                if (row[c] > row[arg]) arg = c;
            }
            const int label = labels[static_cast<std::size_t>(b)];
            if (label < 0 || label >= classes) {
                throw LabelError("window label " + std::to_string(label) + " out of range");
            }
            ++eval.total[static_cast<std::size_t>(label)];
            if (arg == label) ++eval.correct[static_cast<std::size_t>(label)];
        }
    }

    double sum = 0.0;
    double min_acc = 1.0;
    int seen = 0;
    for (int c = 0; c < classes; ++c) {
        if (eval.total[static_cast<std::size_t>(c)] == 0) continue;
        const double acc = static_cast<double>(eval.correct[static_cast<std::size_t>(c)]) /
                           static_cast<double>(eval.total[static_cast<std::size_t>(c)]);
        sum += acc;
        min_acc = std::min(min_acc, acc);
        ++seen;
    }
    eval.macro_accuracy = seen > 0 ? sum / static_cast<double>(seen) : 0.0;
    eval.min_accuracy = seen > 0 ? min_acc : 0.0;
    return eval;
}

template <typename S>
TrainResult train_model(const ModelConfig& config,
                        const std::vector<SequenceSlice>& train_slices,
                        const std::vector<SequenceSlice>& val_slices,
                        const TrainOptions& options) {
    config.validate();
    if (train_slices.empty() || val_slices.empty()) {
        throw TrainingError("training requires non-empty train and validation splits");
    }
    if (options.epochs_min < 1 || options.max_epochs < options.epochs_min) {
        throw ParameterError("invalid epoch bounds");
    }
    if (options.batch_size < 1) throw ParameterError("batch size must be >= 1");

    WindowSpec train_spec;
    train_spec.length_frames = config.window_length;
    train_spec.stride_frames = options.train_stride;
    WindowSpec val_spec = train_spec;
    val_spec.stride_frames = options.val_stride;

    std::vector<WindowRef> train_windows = windows(train_slices, train_spec);
    const std::vector<WindowRef> val_windows = windows(val_slices, val_spec);
    if (train_windows.empty()) throw TrainingError("no training windows available");
    if (val_windows.empty()) throw TrainingError("no validation windows available");

    const NormStats norm =
        options.normalize ? fit_norm_stats(train_windows, train_spec) : NormStats::disabled_stats();

    auto model = build_model<S>(config);
    Rng init_rng(derive_seed(options.seed, 1));
    model->init_params(init_rng);
    Rng shuffle_rng(derive_seed(options.seed, 2));
    Rng dropout_rng(derive_seed(options.seed, 3));

    auto params = model->params();
    Adam<S> optimizer;
    EarlyStopMonitor monitor(options.epochs_min, options.patience, options.min_improvement);

    TrainResult result;
    result.checkpoint.config = config;
    result.checkpoint.norm = norm;
    result.checkpoint.meta.seed = options.seed;

    std::vector<int> labels;
    for (int epoch = 1; epoch <= options.max_epochs; ++epoch) {
        shuffle_rng.shuffle(train_windows);
        double loss_sum = 0.0;
        std::size_t batch_count = 0;
        for (std::size_t begin = 0; begin < train_windows.size();
             begin += static_cast<std::size_t>(options.batch_size)) {
            const std::size_t end =
                std::min(train_windows.size(), begin + static_cast<std::size_t>(options.batch_size));
            const Tensor<S> input =
                assemble_batch<S>(train_windows, begin, end, train_spec, norm, &labels);
            const Tensor<S> logits = model->forward(input, /*training=*/true, &dropout_rng);
            LossResult<S> loss = cross_entropy(logits, labels);
            if (!std::isfinite(loss.loss)) {
                throw TrainingError("non-finite loss at epoch " + std::to_string(epoch) +
                                    " step " + std::to_string(batch_count));
            }
            loss_sum += loss.loss;
            ++batch_count;
            model->zero_grads();
            model->backward(loss.dlogits);
            optimizer.step(params, config.learning_rate);
        }

        const WindowEval val = evaluate_windows(*model, val_windows, val_spec, norm,
                                                options.batch_size);
        EpochStats stats;
        stats.epoch = epoch;
        stats.train_loss = loss_sum / static_cast<double>(std::max<std::size_t>(1, batch_count));
        stats.val_macro = val.macro_accuracy;
        stats.val_min = val.min_accuracy;
        result.history.push_back(stats);
        if (options.verbose) {
            std::fprintf(stderr, "epoch %3d  loss %.4f  val_macro %.4f  val_min %.4f\n",
                         epoch, stats.train_loss, stats.val_macro, stats.val_min);
        }

        if (monitor.observe(epoch, val.min_accuracy)) {
            result.checkpoint.params = export_params(*model);
            result.checkpoint.meta.epoch = epoch;
            result.checkpoint.meta.val_min_accuracy = val.min_accuracy;
            result.checkpoint.meta.val_macro_accuracy = val.macro_accuracy;
        }
        result.stopped_epoch = epoch;
        if (monitor.should_stop(epoch)) break;
    }

    result.best_epoch = monitor.best_epoch();
    if (result.checkpoint.params.empty()) {
        // Never improved above the initial -1 sentinel cannot happen, but a
        // model that scored 0 on every epoch still snapshots its first epoch.
        throw TrainingError("no snapshot recorded during training");
    }
    return result;
}

} // namespace xrid
