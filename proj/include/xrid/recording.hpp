// Tracking recordings: time-stamped HMD + controller poses for one
// user-session, plus resampling, trimming and travel statistics.
#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "xrid/error.hpp"
#include "xrid/geometry.hpp"

namespace xrid {

struct PoseFrame {
    double timestamp_s = 0.0; // seconds since recording start
    Pose hmd;
    Pose controller_left;
    Pose controller_right;
};

// Scene-relative tracking stream. Positions in centimeters, +y up.
struct Recording {
    std::string user_id;
    int session_id = 1;
    double nominal_rate_hz = 0.0;
    std::vector<PoseFrame> frames;

    double duration_s() const {
        return frames.empty() ? 0.0 : frames.back().timestamp_s - frames.front().timestamp_s;
    }
};

struct TravelStats {
    double total_horizontal_path_m = 0.0;
    double meters_per_minute = 0.0;
    double duration_min = 0.0;
};

namespace detail {

inline Pose interpolate_pose(const Pose& a, const Pose& b, double t) {
    Pose out;
    out.position = lerp(a.position, b.position, t);
    out.rotation = slerp(a.rotation, b.rotation, t);
    return out;
}

inline PoseFrame interpolate_frame(const PoseFrame& a, const PoseFrame& b, double alpha, double t) {
    PoseFrame out;
    out.timestamp_s = t;
    out.hmd = interpolate_pose(a.hmd, b.hmd, alpha);
    out.controller_left = interpolate_pose(a.controller_left, b.controller_left, alpha);
    out.controller_right = interpolate_pose(a.controller_right, b.controller_right, alpha);
    return out;
}

} // namespace detail

// Resample onto the uniform grid t_first, t_first + 1/hz, ... <= t_last.
// Positions are interpolated linearly, rotations by shortest-arc slerp.
inline Recording resample(const Recording& rec, double target_hz = 15.0) {
    if (target_hz <= 0.0) throw ParameterError("resample target rate must be positive");
    if (rec.frames.size() < 2) throw EmptyRecordingError("resample requires at least 2 frames");

    const double t0 = rec.frames.front().timestamp_s;
    const double t_last = rec.frames.back().timestamp_s;
    const double grid_tol = 1e-9;

    Recording out;
    out.user_id = rec.user_id;
    out.session_id = rec.session_id;
    out.nominal_rate_hz = target_hz;

    std::size_t seg = 0; // index of the segment [seg, seg+1] bracketing t
    for (std::size_t i = 0;; ++i) {
        const double t = t0 + static_cast<double>(i) / target_hz;
        if (t > t_last + grid_tol) break;
        while (seg + 2 < rec.frames.size() && rec.frames[seg + 1].timestamp_s <= t) ++seg;
        const PoseFrame& a = rec.frames[seg];
        const PoseFrame& b = rec.frames[seg + 1];
        double alpha = (t - a.timestamp_s) / (b.timestamp_s - a.timestamp_s);
        if (alpha < 0.0) alpha = 0.0;
        if (alpha > 1.0) alpha = 1.0;
        if (t == a.timestamp_s) alpha = 0.0;
        if (t == b.timestamp_s) alpha = 1.0;
        out.frames.push_back(detail::interpolate_frame(a, b, alpha, t));
    }
    return out;
}

// Remove the head/tail margins and re-base timestamps to start at 0.
inline Recording trim(const Recording& rec, double head_s = 60.0, double tail_s = 60.0) {
    if (head_s < 0.0 || tail_s < 0.0) throw ParameterError("trim margins must be non-negative");
    const double duration = rec.duration_s();
    if (duration <= head_s + tail_s) {
        throw TrimError("recording too short to trim: " + std::to_string(duration) +
                        " s available, " + std::to_string(head_s + tail_s) + " s requested");
    }
    const double t0 = rec.frames.front().timestamp_s;
    const double cutoff_head = t0 + head_s;
    const double cutoff_tail = rec.frames.back().timestamp_s - tail_s;

    Recording out;
    out.user_id = rec.user_id;
    out.session_id = rec.session_id;
    out.nominal_rate_hz = rec.nominal_rate_hz;

    double base = 0.0;
    bool have_base = false;
    for (const PoseFrame& f : rec.frames) {
        if (f.timestamp_s < cutoff_head || f.timestamp_s > cutoff_tail) continue;
        PoseFrame kept = f;
        if (!have_base) {
            base = f.timestamp_s;
            have_base = true;
        }
        kept.timestamp_s = f.timestamp_s - base;
        out.frames.push_back(kept);
    }
    if (out.frames.size() < 2) throw TrimError("fewer than 2 frames remain after trim");
    return out;
}

// Horizontal (x, z) path length of the HMD, converted cm -> m.
inline TravelStats travel_stats(const Recording& rec) {
    if (rec.frames.size() < 2) throw EmptyRecordingError("travel_stats requires at least 2 frames");
    double total_cm = 0.0;
    for (std::size_t i = 1; i < rec.frames.size(); ++i) {
        const Vec3& a = rec.frames[i - 1].hmd.position;
        const Vec3& b = rec.frames[i].hmd.position;
        total_cm += std::hypot(b.x - a.x, b.z - a.z);
    }
    TravelStats stats;
    stats.total_horizontal_path_m = total_cm / 100.0;
    stats.duration_min = rec.duration_s() / 60.0;
    stats.meters_per_minute =
        stats.duration_min > 0.0 ? stats.total_horizontal_path_m / stats.duration_min : 0.0;
    return stats;
}

} // namespace xrid
