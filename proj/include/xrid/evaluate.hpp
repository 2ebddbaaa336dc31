// Enrollment-time x use-time accuracy grid and seed-robustness protocol.
//
// For each enrollment length and repeat, the model is retrained on a fresh
// seeded enrollment slice; each test recording is then chopped into
// consecutive disjoint use-time segments, each segment is identified by
// majority vote, and the cell stores the macro accuracy averaged over
// repeats. Cells whose footage demands cannot be met are marked unavailable.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "xrid/error.hpp"
#include "xrid/identify.hpp"
#include "xrid/metrics.hpp"
#include "xrid/model.hpp"
#include "xrid/rng.hpp"
#include "xrid/sampling.hpp"
#include "xrid/train.hpp"

namespace xrid {

struct TimeBudget {
    bool all = false;
    double minutes = 0.0;

    static TimeBudget all_data() { return {true, 0.0}; }
    static TimeBudget of(double m) { return {false, m}; }

    std::string str() const {
        if (all) return "all";
        std::ostringstream s;
        s << minutes;
        return s.str();
    }
};

inline TimeBudget parse_time_budget(const std::string& s) {
    if (s == "all") return TimeBudget::all_data();
    try {
        const double m = std::stod(s);
        if (m <= 0.0) throw ParameterError("time budget must be positive: " + s);
        return TimeBudget::of(m);
    } catch (const std::invalid_argument&) {
        throw ParameterError("cannot parse time budget '" + s + "' (minutes or 'all')");
    }
}

inline std::vector<TimeBudget> default_enrollment_budgets() {
    return {TimeBudget::of(1), TimeBudget::of(5), TimeBudget::of(10), TimeBudget::of(15),
            TimeBudget::of(20), TimeBudget::of(25), TimeBudget::all_data()};
}

inline std::vector<TimeBudget> default_use_budgets() {
    std::vector<TimeBudget> budgets;
    for (int m = 1; m <= 25; ++m) budgets.push_back(TimeBudget::of(m));
    budgets.push_back(TimeBudget::all_data());
    return budgets;
}

struct EvalCell {
    bool available = false;
    std::vector<double> per_repeat;
    double mean = 0.0;
    std::vector<double> per_class_mean; // mean per-class accuracy over repeats
};

struct EvalReport {
    std::vector<TimeBudget> t_enr_list;
    std::vector<TimeBudget> t_use_list;
    int repeats = 0;
    std::uint64_t base_seed = 0;
    ModelConfig config;
    int class_count = 0;
    std::vector<std::vector<EvalCell>> cells; // [enrollment][use]
};

struct EvalGridOptions {
    std::vector<TimeBudget> t_enr_list = default_enrollment_budgets();
    std::vector<TimeBudget> t_use_list = default_use_budgets();
    int repeats = 5;
    std::uint64_t base_seed = 0;
    TrainOptions train;
    int batch_size = 256;
    bool verbose = false;
};

namespace detail {

// Consecutive disjoint segments of n_frames; the trailing remainder is
// dropped so every identification trial sees the same footage length.
inline std::vector<SequenceSlice> chop_segments(const SequenceSlice& slice, std::size_t n_frames) {
    std::vector<SequenceSlice> segments;
    if (n_frames == 0) return segments;
    for (std::size_t begin = slice.begin; begin + n_frames <= slice.end; begin += n_frames) {
        segments.push_back({slice.sequence, begin, begin + n_frames, slice.label});
    }
    return segments;
}

} // namespace detail

template <typename S>
EvalReport eval_grid(const Splits& splits, const ModelConfig& base_config,
                     const EvalGridOptions& options) {
    if (options.repeats < 1) throw ParameterError("repeats must be >= 1");
    if (splits.test.empty()) throw SplitError("evaluation grid requires a test split");

    ModelConfig config = base_config;
    config.class_count = splits.class_count;

    EvalReport report;
    report.t_enr_list = options.t_enr_list;
    report.t_use_list = options.t_use_list;
    report.repeats = options.repeats;
    report.base_seed = options.base_seed;
    report.config = config;
    report.class_count = splits.class_count;
    report.cells.assign(options.t_enr_list.size(),
                        std::vector<EvalCell>(options.t_use_list.size()));

    for (std::size_t ei = 0; ei < options.t_enr_list.size(); ++ei) {
        const TimeBudget t_enr = options.t_enr_list[ei];

        bool enr_feasible = true;
        if (!t_enr.all) {
            for (const SequenceSlice& slice : splits.train) {
                if (minutes_to_frames(t_enr.minutes, slice.sequence->rate_hz) > slice.size()) {
                    enr_feasible = false;
                    break;
                }
            }
        }
        if (!enr_feasible) continue; // whole row unavailable

        // Per-(t_use, repeat, class) aggregation for the per-class report.
        std::vector<std::vector<std::vector<double>>> class_acc(
            options.t_use_list.size(),
            std::vector<std::vector<double>>(static_cast<std::size_t>(options.repeats)));

        for (int repeat = 0; repeat < options.repeats; ++repeat) {
            std::vector<SequenceSlice> enrollment;
            enrollment.reserve(splits.train.size());
            for (const SequenceSlice& slice : splits.train) {
                const std::uint64_t seed =
                    derive_seed(options.base_seed, (ei << 20) | static_cast<std::uint64_t>(repeat),
                                static_cast<std::uint64_t>(slice.label));
                enrollment.push_back(
                    select_enrollment(slice, t_enr.all ? -1.0 : t_enr.minutes, seed));
            }

            TrainOptions train_options = options.train;
            train_options.seed = derive_seed(options.base_seed + 0x5eedULL,
                                             (ei << 20) | static_cast<std::uint64_t>(repeat), 0);
            const TrainResult trained =
                train_model<S>(config, enrollment, splits.validation, train_options);
            auto model = restore_model<S>(trained.checkpoint);

            WindowSpec window_spec;
            window_spec.length_frames = config.window_length;

            for (std::size_t ui = 0; ui < options.t_use_list.size(); ++ui) {
                const TimeBudget t_use = options.t_use_list[ui];
                std::vector<LabeledVote> votes;
                for (const SequenceSlice& test_slice : splits.test) {
                    std::vector<SequenceSlice> segments;
                    if (t_use.all) {
                        segments.push_back(test_slice);
                    } else {
                        const std::size_t n =
                            minutes_to_frames(t_use.minutes, test_slice.sequence->rate_hz);
                        if (n < static_cast<std::size_t>(config.window_length)) continue;
                        segments = detail::chop_segments(test_slice, n);
                    }
                    for (const SequenceSlice& segment : segments) {
                        if (segment.size() < static_cast<std::size_t>(config.window_length)) continue;
                        LabeledVote lv;
                        lv.true_label = segment.label;
                        lv.vote = identify_segment(*model, trained.checkpoint.norm, segment,
                                                   window_spec, options.batch_size);
                        votes.push_back(std::move(lv));
                    }
                }
                if (votes.empty()) continue; // cell stays unavailable
                const MetricSet metrics = compute_metrics(votes, splits.class_count);
                EvalCell& cell = report.cells[ei][ui];
                cell.available = true;
                cell.per_repeat.push_back(metrics.macro_accuracy);
                class_acc[ui][static_cast<std::size_t>(repeat)] = metrics.per_class_accuracy;
                if (options.verbose) {
                    std::fprintf(stderr, "A(%s,%s) repeat %d = %.4f\n", t_enr.str().c_str(),
                                 t_use.str().c_str(), repeat, metrics.macro_accuracy);
                }
            }
        }

        for (std::size_t ui = 0; ui < options.t_use_list.size(); ++ui) {
            EvalCell& cell = report.cells[ei][ui];
            if (!cell.available) continue;
            double sum = 0.0;
            for (double v : cell.per_repeat) sum += v;
            cell.mean = sum / static_cast<double>(cell.per_repeat.size());
            cell.per_class_mean.assign(static_cast<std::size_t>(splits.class_count), 0.0);
            std::vector<int> counts(static_cast<std::size_t>(splits.class_count), 0);
            for (const auto& per_class : class_acc[ui]) {
                if (per_class.empty()) continue;
                for (int c = 0; c < splits.class_count; ++c) {
                    if (per_class[static_cast<std::size_t>(c)] < 0.0) continue;
                    cell.per_class_mean[static_cast<std::size_t>(c)] +=
                        per_class[static_cast<std::size_t>(c)];
                    ++counts[static_cast<std::size_t>(c)];
                }
            }
            for (int c = 0; c < splits.class_count; ++c) {
                if (counts[static_cast<std::size_t>(c)] > 0) {
                    cell.per_class_mean[static_cast<std::size_t>(c)] /=
                        static_cast<double>(counts[static_cast<std::size_t>(c)]);
                } else {
                    cell.per_class_mean[static_cast<std::size_t>(c)] = -1.0;
                }
            }
        }
    }
    return report;
}

struct SeedRobustness {
    std::vector<double> per_seed_accuracy; // macro per-window accuracy
    double min_accuracy = 0.0;
    double max_accuracy = 0.0;
    double range = 0.0;
};

// Retrains n models identical up to the seed and reports the spread of the
// per-window (single-subsequence) accuracy on the test split.
template <typename S>
SeedRobustness seed_robustness(const Splits& splits, const ModelConfig& base_config,
                               const TrainOptions& base_options, int n, std::uint64_t base_seed,
                               int eval_stride = 1, int batch_size = 256) {
    if (n < 2) throw ParameterError("seed robustness needs n >= 2");
    ModelConfig config = base_config;
    config.class_count = splits.class_count;

    WindowSpec eval_spec;
    eval_spec.length_frames = config.window_length;
    eval_spec.stride_frames = eval_stride;
    const std::vector<WindowRef> test_windows = windows(splits.test, eval_spec);
    if (test_windows.empty()) throw TooShortError("test split yields no windows");

    SeedRobustness result;
    for (int i = 0; i < n; ++i) {
        TrainOptions options = base_options;
        options.seed = derive_seed(base_seed, static_cast<std::uint64_t>(i));
        const TrainResult trained = train_model<S>(config, splits.train, splits.validation, options);
        auto model = restore_model<S>(trained.checkpoint);
        const WindowEval eval =
            evaluate_windows(*model, test_windows, eval_spec, trained.checkpoint.norm, batch_size);
        result.per_seed_accuracy.push_back(eval.macro_accuracy);
    }
    result.min_accuracy = *std::min_element(result.per_seed_accuracy.begin(),
                                            result.per_seed_accuracy.end());
    result.max_accuracy = *std::max_element(result.per_seed_accuracy.begin(),
                                            result.per_seed_accuracy.end());
    result.range = result.max_accuracy - result.min_accuracy;
    return result;
}

inline void write_grid_csv(const EvalReport& report, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write grid csv: " + path.string());
    out << "t_enr,t_use,repeat,accuracy\n";
    for (std::size_t ei = 0; ei < report.t_enr_list.size(); ++ei) {
        for (std::size_t ui = 0; ui < report.t_use_list.size(); ++ui) {
            const EvalCell& cell = report.cells[ei][ui];
            if (!cell.available) {
                out << report.t_enr_list[ei].str() << ',' << report.t_use_list[ui].str()
                    << ",,unavailable\n";
                continue;
            }
            for (std::size_t r = 0; r < cell.per_repeat.size(); ++r) {
                out << report.t_enr_list[ei].str() << ',' << report.t_use_list[ui].str() << ','
                    << r << ',' << cell.per_repeat[r] << '\n';
            }
        }
    }
    if (!out) throw IoError("write failed: " + path.string());
}

inline void write_per_class_csv(const EvalReport& report, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write per-class csv: " + path.string());
    out << "t_enr,t_use,class,mean_accuracy\n";
    for (std::size_t ei = 0; ei < report.t_enr_list.size(); ++ei) {
        for (std::size_t ui = 0; ui < report.t_use_list.size(); ++ui) {
            const EvalCell& cell = report.cells[ei][ui];
            if (!cell.available) continue;
            for (int c = 0; c < report.class_count; ++c) {
                const double acc = cell.per_class_mean[static_cast<std::size_t>(c)];
                if (acc < 0.0) continue;
                out << report.t_enr_list[ei].str() << ',' << report.t_use_list[ui].str() << ','
                    << c << ',' << acc << '\n';
            }
        }
    }
    if (!out) throw IoError("write failed: " + path.string());
}

// Human-readable matrix, one row per enrollment budget.
inline std::string format_summary(const EvalReport& report) {
    std::ostringstream out;
    out << "accuracy grid A(t_enr, t_use), mean over " << report.repeats << " repeats\n";
    out << "t_enr\\t_use";
    for (const TimeBudget& u : report.t_use_list) out << '\t' << u.str();
    out << '\n';
    for (std::size_t ei = 0; ei < report.t_enr_list.size(); ++ei) {
        out << report.t_enr_list[ei].str();
        for (std::size_t ui = 0; ui < report.t_use_list.size(); ++ui) {
            const EvalCell& cell = report.cells[ei][ui];
            if (cell.available) {
                char buf[16];
                std::snprintf(buf, sizeof(buf), "%.3f", cell.mean);
                out << '\t' << buf;
            } else {
                out << "\t-";
            }
        }
        out << '\n';
    }
    return out.str();
}

} // namespace xrid
