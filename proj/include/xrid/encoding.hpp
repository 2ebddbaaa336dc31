// Body-relative feature encodings.
//
// BR re-expresses the controllers in the HMD frame and keeps only the HMD's
// rotation about the horizontal axes, giving 18 features per frame:
// (pos xyz + rot xyzw) for each controller plus the HMD residual rotation
// xyzw. BRV/BRA are first/second per-frame differences of BR: arithmetic
// differences for positions, relative-rotation quaternions for rotations.
#pragma once

#include <array>
#include <cstddef>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "xrid/error.hpp"
#include "xrid/geometry.hpp"
#include "xrid/recording.hpp"

namespace xrid {

enum class EncodingKind { SR, BR, BRV, BRA };

inline const char* to_string(EncodingKind kind) {
    switch (kind) {
        case EncodingKind::SR: return "sr";
        case EncodingKind::BR: return "br";
        case EncodingKind::BRV: return "brv";
        case EncodingKind::BRA: return "bra";
    }
    return "?";
}

inline EncodingKind parse_encoding(const std::string& s) {
    if (s == "sr" || s == "SR") return EncodingKind::SR;
    if (s == "br" || s == "BR") return EncodingKind::BR;
    if (s == "brv" || s == "BRV") return EncodingKind::BRV;
    if (s == "bra" || s == "BRA") return EncodingKind::BRA;
    throw ParameterError("unknown encoding '" + s + "' (expected sr|br|brv|bra)");
}

inline constexpr std::size_t kFeatureCount = 18;

// Feature vector layout.
inline constexpr std::size_t kLeftPos = 0;   // x, y, z
inline constexpr std::size_t kLeftRot = 3;   // x, y, z, w
inline constexpr std::size_t kRightPos = 7;  // x, y, z
inline constexpr std::size_t kRightRot = 10; // x, y, z, w
inline constexpr std::size_t kHmdRot = 14;   // x, y, z, w

inline constexpr std::array<const char*, kFeatureCount> kFeatureNames = {
    "left_pos_x",  "left_pos_y",  "left_pos_z",
    "left_rot_x",  "left_rot_y",  "left_rot_z",  "left_rot_w",
    "right_pos_x", "right_pos_y", "right_pos_z",
    "right_rot_x", "right_rot_y", "right_rot_z", "right_rot_w",
    "hmd_rot_x",   "hmd_rot_y",   "hmd_rot_z",   "hmd_rot_w",
};

struct FeatureFrame {
    std::array<double, kFeatureCount> values{};

    Quaternion quat_at(std::size_t offset) const {
        return {values[offset], values[offset + 1], values[offset + 2], values[offset + 3]};
    }
    void set_quat(std::size_t offset, const Quaternion& q) {
        values[offset] = q.x;
        values[offset + 1] = q.y;
        values[offset + 2] = q.z;
        values[offset + 3] = q.w;
    }
    void set_vec(std::size_t offset, const Vec3& v) {
        values[offset] = v.x;
        values[offset + 1] = v.y;
        values[offset + 2] = v.z;
    }
};

struct FeatureSequence {
    std::string user_id;
    int session_id = 1;
    double rate_hz = 15.0;
    EncodingKind kind = EncodingKind::BR;
    std::vector<FeatureFrame> frames;

    double duration_s() const {
        return rate_hz > 0.0 ? static_cast<double>(frames.size()) / rate_hz : 0.0;
    }
};

// Resolve the quaternion double cover. With a reference, the result lies in
// the reference's hemisphere (dot >= 0); without one, w >= 0 with ties broken
// by the first non-zero of x, y, z.
inline Quaternion canonicalize(const Quaternion& q, const Quaternion* reference = nullptr) {
    const double n = q.norm();
    if (n < 1e-12) throw DegenerateRotationError("zero quaternion has no canonical form");
    Quaternion unit{q.x / n, q.y / n, q.z / n, q.w / n};
    if (reference) {
        if (unit.dot(*reference) < 0.0) return -unit;
        return unit;
    }
    if (unit.w > 0.0) return unit;
    if (unit.w < 0.0) return -unit;
    for (double c : {unit.x, unit.y, unit.z}) {
        if (c > 0.0) return unit;
        if (c < 0.0) return -unit;
    }
    return unit;
}

// Relative rotation inverse(prev) * curr expressed in prev's local basis,
// canonicalized against identity. Equal inputs short-circuit to an exact
// identity so static motion differentiates to exact zeros.
inline Quaternion quat_delta(const Quaternion& prev, const Quaternion& curr) {
    if (prev == curr) return Quaternion::identity();
    return canonicalize(prev.conjugate() * curr);
}

struct SwingTwist {
    Quaternion twist; // rotation about the given axis
    Quaternion swing; // rotation about an axis orthogonal to it
};

// Factor q = twist * swing. The twist is the projection of q onto the axis;
// if that projection vanishes (pure 180-degree swing), twist is identity.
inline SwingTwist swing_twist(const Quaternion& q, const Vec3& axis) {
    const Vec3 a = axis.normalized();
    const double proj = q.x * a.x + q.y * a.y + q.z * a.z;
    Quaternion twist{proj * a.x, proj * a.y, proj * a.z, q.w};
    const double n = twist.norm();
    if (n < 1e-12) {
        return {Quaternion::identity(), q};
    }
    twist = {twist.x / n, twist.y / n, twist.z / n, twist.w / n};
    const Quaternion swing = twist.conjugate() * q;
    return {twist, swing};
}

// Operand order for rotational differences. PreviousFrameLocal expresses the
// increment in the previous frame's basis (inverse(prev) * curr); WorldFrame
// is the alternative reading (curr * inverse(prev)).
enum class DeltaOrder { PreviousFrameLocal, WorldFrame };

// Reference frame used to re-express the controllers.
enum class HmdReference { FullOrientation, YawOnly };

struct EncodeOptions {
    DeltaOrder delta_order = DeltaOrder::PreviousFrameLocal;
    HmdReference hmd_reference = HmdReference::FullOrientation;
};

inline const Vec3 kUpAxis{0.0, 1.0, 0.0};

inline FeatureSequence encode_br(const Recording& rec, const EncodeOptions& options = {}) {
    if (rec.frames.empty()) throw EmptyRecordingError("cannot encode empty recording");

    FeatureSequence seq;
    seq.user_id = rec.user_id;
    seq.session_id = rec.session_id;
    seq.rate_hz = rec.nominal_rate_hz;
    seq.kind = EncodingKind::BR;
    seq.frames.reserve(rec.frames.size());

    const FeatureFrame* prev = nullptr;
    for (std::size_t i = 0; i < rec.frames.size(); ++i) {
        const PoseFrame& f = rec.frames[i];
        Quaternion q_hmd;
        try {
            q_hmd = f.hmd.rotation.normalized();
        } catch (const DegenerateRotationError&) {
            throw DegenerateRotationError("degenerate HMD rotation at frame " + std::to_string(i));
        }
        const SwingTwist st = swing_twist(q_hmd, kUpAxis);
        const Quaternion reference =
            options.hmd_reference == HmdReference::FullOrientation ? q_hmd : st.twist;
        const Quaternion inv_ref = reference.conjugate();

        FeatureFrame out;
        auto encode_controller = [&](const Pose& pose, std::size_t pos_off, std::size_t rot_off) {
            if (pose.rotation.norm() < 1e-12) {
                throw DegenerateRotationError("degenerate controller rotation at frame " +
                                              std::to_string(i));
            }
            out.set_vec(pos_off, inv_ref.rotate(pose.position - f.hmd.position));
            Quaternion q = inv_ref * pose.rotation.normalized();
            const Quaternion* prev_q_ref = nullptr;
            Quaternion prev_q;
            if (prev) {
                prev_q = prev->quat_at(rot_off);
                prev_q_ref = &prev_q;
            }
            out.set_quat(rot_off, canonicalize(q, prev_q_ref));
        };
        encode_controller(f.controller_left, kLeftPos, kLeftRot);
        encode_controller(f.controller_right, kRightPos, kRightRot);

        const Quaternion* prev_hmd_ref = nullptr;
        Quaternion prev_hmd;
        if (prev) {
            prev_hmd = prev->quat_at(kHmdRot);
            prev_hmd_ref = &prev_hmd;
        }
        out.set_quat(kHmdRot, canonicalize(st.swing, prev_hmd_ref));

        seq.frames.push_back(out);
        prev = &seq.frames.back();
    }
    return seq;
}

// Per-frame differences: arithmetic for positions, relative rotations for
// quaternion features. Advances BR -> BRV -> BRA and drops one frame.
inline FeatureSequence differentiate(const FeatureSequence& seq, const EncodeOptions& options = {}) {
    if (seq.kind != EncodingKind::BR && seq.kind != EncodingKind::BRV) {
        throw UnsupportedEncodingError(std::string("cannot differentiate ") + to_string(seq.kind) +
                                       " features");
    }
    if (seq.frames.size() < 2) {
        throw TooShortError("differentiation requires at least 2 frames, got " +
                            std::to_string(seq.frames.size()));
    }

    FeatureSequence out;
    out.user_id = seq.user_id;
    out.session_id = seq.session_id;
    out.rate_hz = seq.rate_hz;
    out.kind = seq.kind == EncodingKind::BR ? EncodingKind::BRV : EncodingKind::BRA;
    out.frames.resize(seq.frames.size() - 1);

    auto delta = [&](const Quaternion& prev, const Quaternion& curr) {
        if (options.delta_order == DeltaOrder::PreviousFrameLocal) return quat_delta(prev, curr);
        if (prev == curr) return Quaternion::identity();
        return canonicalize(curr * prev.conjugate());
    };

    for (std::size_t t = 1; t < seq.frames.size(); ++t) {
        const FeatureFrame& a = seq.frames[t - 1];
        const FeatureFrame& b = seq.frames[t];
        FeatureFrame& d = out.frames[t - 1];
        for (std::size_t k : {kLeftPos, kLeftPos + 1, kLeftPos + 2,
                              kRightPos, kRightPos + 1, kRightPos + 2}) {
            d.values[k] = b.values[k] - a.values[k];
        }
        for (std::size_t off : {kLeftRot, kRightRot, kHmdRot}) {
            d.set_quat(off, delta(a.quat_at(off), b.quat_at(off)));
        }
    }
    return out;
}

inline FeatureSequence encode(const Recording& rec, EncodingKind kind,
                              const EncodeOptions& options = {}) {
    switch (kind) {
        case EncodingKind::SR:
            throw UnsupportedEncodingError("SR is not a model input encoding");
        case EncodingKind::BR:
            return encode_br(rec, options);
        case EncodingKind::BRV:
            return differentiate(encode_br(rec, options), options);
        case EncodingKind::BRA:
            return differentiate(differentiate(encode_br(rec, options), options), options);
    }
    throw UnsupportedEncodingError("unhandled encoding kind");
}

// Debug/diffing dump: timestamp plus the 18 named feature columns.
inline void write_feature_csv(const FeatureSequence& seq, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write feature csv: " + path.string());
    out << "timestamp_s";
    for (const char* name : kFeatureNames) out << ',' << name;
    out << '\n';
    char buf[32];
    for (std::size_t i = 0; i < seq.frames.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g", static_cast<double>(i) / seq.rate_hz);
        out << buf;
        for (double v : seq.frames[i].values) {
            std::snprintf(buf, sizeof(buf), "%.17g", v);
            out << ',' << buf;
        }
        out << '\n';
    }
    if (!out) throw IoError("write failed: " + path.string());
}

} // namespace xrid
