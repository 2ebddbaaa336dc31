// Train/validation/test assembly: per-user session splits, enrollment-length
// restriction, feature standardization, and fixed-length window extraction.
#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "xrid/encoding.hpp"
#include "xrid/error.hpp"
#include "xrid/rng.hpp"

namespace xrid {

struct WindowSpec {
    int length_frames = 300;
    int stride_frames = 1;
    double rate_hz = 15.0;

    void validate() const {
        if (length_frames < 2) throw ParameterError("window length must be >= 2 frames");
        if (stride_frames < 1) throw ParameterError("window stride must be >= 1");
        if (rate_hz <= 0.0) throw ParameterError("window rate must be positive");
    }
    double duration_s() const { return static_cast<double>(length_frames) / rate_hz; }
};

// A contiguous frame range of a feature sequence with its class label.
struct SequenceSlice {
    const FeatureSequence* sequence = nullptr;
    std::size_t begin = 0;
    std::size_t end = 0; // exclusive
    int label = -1;

    std::size_t size() const { return end - begin; }
    double duration_min() const {
        return static_cast<double>(size()) / (sequence->rate_hz * 60.0);
    }
};

// One window: a reference into a slice (no copy) plus the label.
struct WindowRef {
    const FeatureSequence* sequence = nullptr;
    std::size_t start = 0;
    int label = -1;
};

// Materialized window, for the external API and tests.
struct WindowSample {
    std::vector<double> matrix; // length_frames x 18, row-major
    int label = -1;
    std::string user_id;
    int session_id = 1;
    std::size_t start_frame = 0;
};

struct SplitSpec {
    double validation_tail_min = 5.0;
    double enrollment_min = -1.0; // < 0 means all available enrollment data
    std::uint64_t enrollment_seed = 0;

    bool enrollment_all() const { return enrollment_min < 0.0; }
    void validate() const {
        if (validation_tail_min <= 0.0) throw ParameterError("validation tail must be positive");
    }
};

struct Splits {
    std::vector<SequenceSlice> train;
    std::vector<SequenceSlice> validation;
    std::vector<SequenceSlice> test;
    std::map<std::string, int> label_of_user;
    std::vector<std::string> users_without_test; // retained in train/validation
    int class_count = 0;
};

inline std::size_t minutes_to_frames(double minutes, double rate_hz) {
    return static_cast<std::size_t>(std::llround(minutes * 60.0 * rate_hz));
}

// Session 1 minus the validation tail -> train; the tail -> validation;
// session 2 (when present) -> test. Labels are assigned by sorted user id.
inline Splits split_sessions(const std::vector<FeatureSequence>& dataset, const SplitSpec& spec) {
    spec.validate();

    std::map<std::string, const FeatureSequence*> session1;
    std::map<std::string, const FeatureSequence*> session2;
    for (const FeatureSequence& seq : dataset) {
        if (seq.session_id == 1) session1[seq.user_id] = &seq;
        else if (seq.session_id == 2) session2[seq.user_id] = &seq;
        else throw SplitError("user " + seq.user_id + " has invalid session id " +
                              std::to_string(seq.session_id));
    }
    for (const auto& [user, seq] : session2) {
        (void)seq;
        if (!session1.count(user)) {
            throw SplitError("user " + user + " has session 2 but no session 1");
        }
    }

    Splits splits;
    int next_label = 0;
    for (const auto& [user, seq] : session1) {
        splits.label_of_user[user] = next_label++;
        const std::size_t n = seq->frames.size();
        const std::size_t tail = minutes_to_frames(spec.validation_tail_min, seq->rate_hz);
        if (n <= tail) {
            throw SplitError("user " + user + " session 1 duration <= validation tail");
        }
        const int label = splits.label_of_user[user];
        splits.train.push_back({seq, 0, n - tail, label});
        splits.validation.push_back({seq, n - tail, n, label});
        auto it = session2.find(user);
        if (it != session2.end()) {
            splits.test.push_back({it->second, 0, it->second->frames.size(), label});
        } else {
            splits.users_without_test.push_back(user);
        }
    }
    splits.class_count = next_label;
    return splits;
}

// Contiguous slice of exactly t_enr minutes at a seed-deterministic
// uniform-random offset within the available range.
inline SequenceSlice select_enrollment(const SequenceSlice& slice, double t_enr_min,
                                       std::uint64_t seed) {
    if (t_enr_min < 0.0) return slice; // all
    const std::size_t want = minutes_to_frames(t_enr_min, slice.sequence->rate_hz);
    if (want > slice.size()) {
        throw EnrollmentError("requested " + std::to_string(t_enr_min) + " min but only " +
                              std::to_string(slice.duration_min()) + " min available for user " +
                              slice.sequence->user_id);
    }
    if (want < 1) throw EnrollmentError("enrollment length must cover at least one frame");
    Rng rng(seed);
    const std::size_t max_offset = slice.size() - want;
    const std::size_t offset =
        static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(max_offset)));
    return {slice.sequence, slice.begin + offset, slice.begin + offset + want, slice.label};
}

// Per-feature z-score statistics, fit on training windows only.
struct NormStats {
    std::array<double, kFeatureCount> mean{};
    std::array<double, kFeatureCount> stddev{};
    bool enabled = true;

    static NormStats disabled_stats() {
        NormStats s;
        s.mean.fill(0.0);
        s.stddev.fill(1.0);
        s.enabled = false;
        return s;
    }
};

inline std::vector<WindowRef> windows(const SequenceSlice& slice, const WindowSpec& spec) {
    spec.validate();
    std::vector<WindowRef> out;
    const std::size_t n = slice.size();
    const std::size_t length = static_cast<std::size_t>(spec.length_frames);
    if (n < length) return out; // too short: empty stream, not an error
    const std::size_t stride = static_cast<std::size_t>(spec.stride_frames);
    const std::size_t count = (n - length) / stride + 1;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        out.push_back({slice.sequence, slice.begin + i * stride, slice.label});
    }
    return out;
}

inline std::vector<WindowRef> windows(const std::vector<SequenceSlice>& slices,
                                      const WindowSpec& spec) {
    std::vector<WindowRef> out;
    for (const SequenceSlice& s : slices) {
        const auto w = windows(s, spec);
        out.insert(out.end(), w.begin(), w.end());
    }
    return out;
}

inline NormStats fit_norm_stats(const std::vector<WindowRef>& train_windows,
                                const WindowSpec& spec) {
    if (train_windows.empty()) throw ParameterError("cannot fit normalization on zero windows");
    NormStats stats;
    std::array<double, kFeatureCount> sum{};
    std::array<double, kFeatureCount> sum_sq{};
    std::size_t count = 0;
    for (const WindowRef& w : train_windows) {
        for (int t = 0; t < spec.length_frames; ++t) {
            const auto& values = w.sequence->frames[w.start + static_cast<std::size_t>(t)].values;
            for (std::size_t k = 0; k < kFeatureCount; ++k) {
                sum[k] += values[k];
                sum_sq[k] += values[k] * values[k];
            }
        }
        count += static_cast<std::size_t>(spec.length_frames);
    }
    for (std::size_t k = 0; k < kFeatureCount; ++k) {
        stats.mean[k] = sum[k] / static_cast<double>(count);
        const double var = std::max(0.0, sum_sq[k] / static_cast<double>(count) -
                                             stats.mean[k] * stats.mean[k]);
        stats.stddev[k] = std::max(std::sqrt(var), 1e-8);
    }
    return stats;
}

inline void apply_norm(WindowSample& sample, const NormStats& stats) {
    if (!stats.enabled) return;
    const std::size_t rows = sample.matrix.size() / kFeatureCount;
    for (std::size_t t = 0; t < rows; ++t) {
        for (std::size_t k = 0; k < kFeatureCount; ++k) {
            double& v = sample.matrix[t * kFeatureCount + k];
            v = (v - stats.mean[k]) / stats.stddev[k];
        }
    }
}

inline WindowSample materialize(const WindowRef& ref, const WindowSpec& spec) {
    WindowSample sample;
    sample.label = ref.label;
    sample.user_id = ref.sequence->user_id;
    sample.session_id = ref.sequence->session_id;
    sample.start_frame = ref.start;
    sample.matrix.resize(static_cast<std::size_t>(spec.length_frames) * kFeatureCount);
    for (int t = 0; t < spec.length_frames; ++t) {
        const auto& values = ref.sequence->frames[ref.start + static_cast<std::size_t>(t)].values;
        for (std::size_t k = 0; k < kFeatureCount; ++k) {
            sample.matrix[static_cast<std::size_t>(t) * kFeatureCount + k] = values[k];
        }
    }
    return sample;
}

// Reproducibility audit trail: frame ranges per split plus enrollment seeds.
inline void write_split_manifest(const Splits& splits,
                                 const std::vector<SequenceSlice>& enrollment,
                                 const SplitSpec& spec,
                                 const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write split manifest: " + path.string());
    out << "xrid-split-manifest 1\n";
    out << "validation_tail_min=" << spec.validation_tail_min << '\n';
    out << "enrollment_min=" << (spec.enrollment_all() ? std::string("all")
                                                       : std::to_string(spec.enrollment_min))
        << '\n';
    out << "enrollment_seed=" << spec.enrollment_seed << '\n';
    auto dump = [&](const char* name, const std::vector<SequenceSlice>& slices) {
        for (const SequenceSlice& s : slices) {
            out << name << ' ' << s.sequence->user_id << " session=" << s.sequence->session_id
                << " label=" << s.label << " frames=[" << s.begin << ',' << s.end << ")\n";
        }
    };
    dump("train", splits.train);
    dump("validation", splits.validation);
    dump("test", splits.test);
    dump("enrollment", enrollment);
    for (const std::string& user : splits.users_without_test) {
        out << "warning user " << user << " has no session 2; excluded from test\n";
    }
    if (!out) throw IoError("write failed: " + path.string());
}

} // namespace xrid
