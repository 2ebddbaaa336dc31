// Deterministic parametric motion generator. Each user is a bundle of
// oscillation frequencies, amplitudes and phases; each session is a fresh
// trajectory (random walk, drift, noise) in the same style. Oscillation
// frequencies live on a 0.25 Hz grid indexed by mixed-radix digits of the
// user seed, so any two distinct seeds differ by at least 0.25 Hz in at
// least one frequency slot.
//
// Controller positions carry a session-specific low-frequency drift on top
// of near-identical rest offsets: a plain body-relative encoding sees a
// drifting DC component that differs between sessions, while the derivative
// encodings filter it out.
#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <string>
#include <vector>

#include "xrid/error.hpp"
#include "xrid/geometry.hpp"
#include "xrid/motion_csv.hpp"
#include "xrid/recording.hpp"
#include "xrid/rng.hpp"

namespace xrid {

struct SyntheticUserParams {
    std::uint64_t seed = 0;

    double head_height_cm = 170.0;
    double bob_amplitude_cm = 2.0;
    double bob_frequency_hz = 1.0;

    Vec3 left_amplitude_cm{8, 6, 7};
    Vec3 left_frequency_hz{1.0, 2.0, 0.8};
    Vec3 left_phase{0, 0, 0};
    Vec3 right_amplitude_cm{8, 6, 7};
    Vec3 right_frequency_hz{1.2, 1.6, 2.2};
    Vec3 right_phase{0, 0, 0};

    Vec3 left_rest_cm{-18, -38, 28};
    Vec3 right_rest_cm{18, -38, 28};

    Vec3 left_rot_axis{0, 0, 1};
    double left_rot_rate_hz = 1.5;
    double left_rot_amplitude_rad = 0.4;
    Vec3 right_rot_axis{1, 0, 0};
    double right_rot_rate_hz = 2.0;
    double right_rot_amplitude_rad = 0.4;

    double head_pitch_amplitude_rad = 0.12;
    double head_pitch_frequency_hz = 0.6;

    double walk_step_cm = 1.0;      // horizontal random-walk scale, 0 = standing
    double yaw_wander_rad = 0.02;   // per-frame yaw random-walk scale
    double drift_amplitude_cm = 5.0; // session-specific controller drift
    double noise_std_cm = 0.3;
    double noise_std_rot_rad = 0.004;

    // Frequencies below 7.5 Hz stay under the Nyquist limit at 15 Hz.
    static constexpr double kMaxFrequencyHz = 7.5;
};

namespace detail {

// Slot frequencies: 0.4 + 0.25 k Hz for k in [0, 24). Distinct seeds below
// 24^10 always differ in at least one digit, hence by >= 0.25 Hz there.
inline double grid_frequency(std::uint64_t seed, int slot) {
    std::uint64_t k = seed;
    for (int i = 0; i < slot; ++i) k /= 24;
    return 0.4 + 0.25 * static_cast<double>(k % 24);
}

} // namespace detail

inline SyntheticUserParams gen_user_params(std::uint64_t user_seed) {
    SyntheticUserParams p;
    p.seed = user_seed;
    Rng rng(derive_seed(user_seed, 0xABCDEF));

    p.head_height_cm = rng.uniform(150.0, 185.0);
    p.bob_amplitude_cm = rng.uniform(1.0, 3.5);
    p.bob_frequency_hz = detail::grid_frequency(user_seed, 0);

    auto amplitude = [&] { return Vec3{rng.uniform(4.0, 13.0), rng.uniform(3.0, 9.0),
                                       rng.uniform(4.0, 13.0)}; };
    auto phase = [&] {
        return Vec3{rng.uniform(0.0, 2.0 * std::numbers::pi),
                    rng.uniform(0.0, 2.0 * std::numbers::pi),
                    rng.uniform(0.0, 2.0 * std::numbers::pi)};
    };
    p.left_amplitude_cm = amplitude();
    p.right_amplitude_cm = amplitude();
    p.left_phase = phase();
    p.right_phase = phase();
    p.left_frequency_hz = {detail::grid_frequency(user_seed, 1),
                           detail::grid_frequency(user_seed, 2),
                           detail::grid_frequency(user_seed, 3)};
    p.right_frequency_hz = {detail::grid_frequency(user_seed, 4),
                            detail::grid_frequency(user_seed, 5),
                            detail::grid_frequency(user_seed, 6)};

    // Rest offsets jitter far less than the session drift, so the static
    // offset alone cannot separate users.
    p.left_rest_cm = Vec3{-18, -38, 28} + Vec3{rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5),
                                               rng.uniform(-1.5, 1.5)};
    p.right_rest_cm = Vec3{18, -38, 28} + Vec3{rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5),
                                               rng.uniform(-1.5, 1.5)};

    auto axis = [&] {
        while (true) {
            Vec3 v{rng.normal(), rng.normal(), rng.normal()};
            if (v.norm() > 1e-6) return v.normalized();
        }
    };
    p.left_rot_axis = axis();
    p.right_rot_axis = axis();
    p.left_rot_rate_hz = detail::grid_frequency(user_seed, 7);
    p.right_rot_rate_hz = detail::grid_frequency(user_seed, 8);
    p.left_rot_amplitude_rad = rng.uniform(0.2, 0.6);
    p.right_rot_amplitude_rad = rng.uniform(0.2, 0.6);

    p.head_pitch_amplitude_rad = rng.uniform(0.05, 0.25);
    p.head_pitch_frequency_hz = detail::grid_frequency(user_seed, 9);

    p.walk_step_cm = rng.uniform(0.5, 2.0);
    p.yaw_wander_rad = rng.uniform(0.005, 0.03);
    p.drift_amplitude_cm = 5.0;
    p.noise_std_cm = 0.3;
    p.noise_std_rot_rad = 0.004;
    return p;
}

inline Recording gen_recording(const SyntheticUserParams& p, double duration_min, double rate_hz,
                               std::uint64_t session_seed) {
    if (duration_min <= 0.0) throw ParameterError("duration must be positive");
    if (rate_hz <= 0.0) throw ParameterError("rate must be positive");

    const std::size_t n_frames =
        static_cast<std::size_t>(std::llround(duration_min * 60.0 * rate_hz));
    Rng rng(derive_seed(p.seed, session_seed, 0x5e5510u));

    Recording rec;
    rec.nominal_rate_hz = rate_hz;
    rec.frames.reserve(n_frames);

    const double two_pi = 2.0 * std::numbers::pi;

    // Smooth horizontal random walk (AR(1) velocity) plus yaw wander.
    double walk_x = 0.0, walk_z = 0.0, vel_x = 0.0, vel_z = 0.0;
    double yaw = rng.uniform(0.0, two_pi) * (p.yaw_wander_rad > 0.0 ? 1.0 : 0.0);
    double yaw_rate = 0.0;

    // Session-specific slow drift per controller axis (AR(1), time constant
    // of a few seconds at 15 Hz).
    double drift_l[3] = {0, 0, 0};
    double drift_r[3] = {0, 0, 0};
    const double drift_rho = 0.995;
    const double drift_sigma = p.drift_amplitude_cm * std::sqrt(1.0 - drift_rho * drift_rho);
    double head_pitch_drift = 0.0;

    auto osc = [&](double amp, double freq, double phase, double t) {
        return amp * std::sin(two_pi * freq * t + phase);
    };

    for (std::size_t i = 0; i < n_frames; ++i) {
        const double t = static_cast<double>(i) / rate_hz;

        vel_x = 0.95 * vel_x + 0.3 * p.walk_step_cm * rng.normal();
        vel_z = 0.95 * vel_z + 0.3 * p.walk_step_cm * rng.normal();
        walk_x += vel_x;
        walk_z += vel_z;
        yaw_rate = 0.95 * yaw_rate + p.yaw_wander_rad * rng.normal();
        yaw += yaw_rate;
        for (int a = 0; a < 3; ++a) {
            drift_l[a] = drift_rho * drift_l[a] + drift_sigma * rng.normal();
            drift_r[a] = drift_rho * drift_r[a] + drift_sigma * rng.normal();
        }
        head_pitch_drift = drift_rho * head_pitch_drift +
                           0.05 * p.head_pitch_amplitude_rad * std::sqrt(1.0 - drift_rho * drift_rho) *
                               rng.normal() * (p.head_pitch_amplitude_rad > 0.0 ? 1.0 : 0.0);

        PoseFrame frame;
        frame.timestamp_s = t;

        const double bob = osc(p.bob_amplitude_cm, p.bob_frequency_hz, 0.3, t);
        Vec3 head{walk_x, p.head_height_cm + bob, walk_z};

        const double pitch = osc(p.head_pitch_amplitude_rad, p.head_pitch_frequency_hz, 1.1, t) +
                             head_pitch_drift;
        const double roll = 0.4 * osc(p.head_pitch_amplitude_rad, p.head_pitch_frequency_hz, 2.6, t);
        const Quaternion q_yaw = Quaternion::from_axis_angle({0, 1, 0}, yaw);
        Quaternion q_head = q_yaw * Quaternion::from_axis_angle({1, 0, 0}, pitch) *
                            Quaternion::from_axis_angle({0, 0, 1}, roll);

        auto hand_pose = [&](const Vec3& rest, const Vec3& amp, const Vec3& freq,
                             const Vec3& phase, const double drift[3], const Vec3& rot_axis,
                             double rot_rate, double rot_amp, double rot_phase) {
            Vec3 local{
                rest.x + osc(amp.x, freq.x, phase.x, t) + drift[0],
                rest.y + osc(amp.y, freq.y, phase.y, t) + drift[1],
                rest.z + osc(amp.z, freq.z, phase.z, t) + drift[2],
            };
            Pose pose;
            pose.position = head + q_yaw.rotate(local);
            const double angle = osc(rot_amp, rot_rate, rot_phase, t);
            pose.rotation = q_yaw * Quaternion::from_axis_angle(rot_axis, angle);
            return pose;
        };

        frame.hmd.position = head;
        frame.hmd.rotation = q_head;
        frame.controller_left = hand_pose(p.left_rest_cm, p.left_amplitude_cm, p.left_frequency_hz,
                                          p.left_phase, drift_l, p.left_rot_axis,
                                          p.left_rot_rate_hz, p.left_rot_amplitude_rad, 0.7);
        frame.controller_right = hand_pose(p.right_rest_cm, p.right_amplitude_cm,
                                           p.right_frequency_hz, p.right_phase, drift_r,
                                           p.right_rot_axis, p.right_rot_rate_hz,
                                           p.right_rot_amplitude_rad, 1.9);

        if (p.noise_std_cm > 0.0) {
            auto jitter = [&](Vec3& v) {
                v.x += rng.normal(0.0, p.noise_std_cm);
                v.y += rng.normal(0.0, p.noise_std_cm);
                v.z += rng.normal(0.0, p.noise_std_cm);
            };
            jitter(frame.hmd.position);
            jitter(frame.controller_left.position);
            jitter(frame.controller_right.position);
        }
        if (p.noise_std_rot_rad > 0.0) {
            auto wobble = [&](Quaternion& q) {
                Vec3 axis{rng.normal(), rng.normal(), rng.normal()};
                const double n = axis.norm();
                if (n > 1e-9) {
                    q = q * Quaternion::from_axis_angle(axis * (1.0 / n),
                                                        rng.normal(0.0, p.noise_std_rot_rad));
                }
            };
            wobble(frame.hmd.rotation);
            wobble(frame.controller_left.rotation);
            wobble(frame.controller_right.rotation);
        }
        frame.hmd.rotation = frame.hmd.rotation.normalized();
        frame.controller_left.rotation = frame.controller_left.rotation.normalized();
        frame.controller_right.rotation = frame.controller_right.rotation.normalized();

        rec.frames.push_back(frame);
    }
    return rec;
}

// Generates <root>/<user>/session_<k>.csv through the canonical writer, so
// the synthetic path exercises the real loader.
struct SynthDatasetSpec {
    int users = 10;
    int sessions = 2;
    double duration_min = 6.0;
    double rate_hz = 15.0;
    std::uint64_t base_seed = 1;
};

inline std::vector<DatasetEntry> write_synthetic_dataset(const std::filesystem::path& root,
                                                         const SynthDatasetSpec& spec) {
    namespace fs = std::filesystem;
    if (spec.users < 1 || spec.sessions < 1) throw ParameterError("need >= 1 user and session");
    fs::create_directories(root);
    std::vector<DatasetEntry> entries;
    for (int u = 0; u < spec.users; ++u) {
        char name[32];
        std::snprintf(name, sizeof(name), "user_%02d", u);
        const fs::path dir = root / name;
        fs::create_directories(dir);
        const SyntheticUserParams params =
            gen_user_params(derive_seed(spec.base_seed, static_cast<std::uint64_t>(u)));
        for (int s = 1; s <= spec.sessions; ++s) {
            Recording rec = gen_recording(params, spec.duration_min, spec.rate_hz,
                                          static_cast<std::uint64_t>(s));
            rec.user_id = name;
            rec.session_id = s;
            const fs::path file = dir / ("session_" + std::to_string(s) + ".csv");
            save_recording(rec, file);
            entries.push_back({name, s, file});
        }
    }
    return entries;
}

} // namespace xrid
