// Canonical tracking CSV: UTF-8, header row, comma delimiter, period decimal
// separator. 22 columns: timestamp_s, then pos_x/pos_y/pos_z/rot_x/rot_y/
// rot_z/rot_w for each of hmd, left, right. A column map adapts foreign
// headers (key=value file, canonical_name=source_header) and may carry a
// timestamp_scale factor (e.g. 0.001 for millisecond timestamps).
#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "xrid/error.hpp"
#include "xrid/recording.hpp"

namespace xrid {

inline constexpr std::array<const char*, 22> kCanonicalColumns = {
    "timestamp_s",
    "hmd_pos_x",   "hmd_pos_y",   "hmd_pos_z",
    "hmd_rot_x",   "hmd_rot_y",   "hmd_rot_z",   "hmd_rot_w",
    "left_pos_x",  "left_pos_y",  "left_pos_z",
    "left_rot_x",  "left_rot_y",  "left_rot_z",  "left_rot_w",
    "right_pos_x", "right_pos_y", "right_pos_z",
    "right_rot_x", "right_rot_y", "right_rot_z", "right_rot_w",
};

struct ColumnMap {
    // canonical name -> source header; names absent here map to themselves
    std::map<std::string, std::string> renames;
    double timestamp_scale = 1.0;

    std::string source_for(const std::string& canonical) const {
        auto it = renames.find(canonical);
        return it == renames.end() ? canonical : it->second;
    }
};

struct LoadStats {
    std::size_t rows_dropped_invalid = 0;   // non-finite values or degenerate quaternions
    std::size_t rows_dropped_duplicate = 0; // repeated timestamps (first kept)
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(field);
            field.clear();
        } else if (c != '\r') {
            field += c;
        }
    }
    fields.push_back(field);
    return fields;
}

inline bool parse_double(std::string_view s, double& out) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    if (s.empty()) return false;
    const char* begin = s.data();
    const char* end = begin + s.size();
    auto result = std::from_chars(begin, end, out);
    return result.ec == std::errc{} && result.ptr == end;
}

inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace detail

inline ColumnMap load_column_map(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open column map: " + path.string());
    ColumnMap map;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            bool blank = line.find_first_not_of(" \t\r") == std::string::npos;
            if (blank) continue;
            throw ConfigError("column map line " + std::to_string(line_no) + " is not key=value");
        }
        auto strip = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        const std::string key = strip(line.substr(0, eq));
        const std::string value = strip(line.substr(eq + 1));
        if (key == "timestamp_scale") {
            double scale = 0.0;
            if (!detail::parse_double(value, scale) || scale <= 0.0) {
                throw ConfigError("timestamp_scale must be a positive number");
            }
            map.timestamp_scale = scale;
            continue;
        }
        bool known = false;
        for (const char* col : kCanonicalColumns) {
            if (key == col) {
                known = true;
                break;
            }
        }
        if (!known) throw ConfigError("unknown canonical column in map: " + key);
        map.renames[key] = value;
    }
    return map;
}

// Loads and validates one recording. Rows with non-finite values or
// degenerate quaternions are dropped; duplicate timestamps keep the first
// occurrence; decreasing timestamps are a hard error. Timestamps are
// re-based to start at 0 and quaternions are normalized.
inline Recording load_recording(const std::filesystem::path& path,
                                const ColumnMap& column_map = {},
                                const std::string& user_id = "",
                                int session_id = 1,
                                LoadStats* stats = nullptr) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open recording: " + path.string());

    std::string header_line;
    if (!std::getline(in, header_line)) throw FormatError("empty file: " + path.string());
    const std::vector<std::string> header = detail::split_csv_line(header_line);

    std::array<std::size_t, 22> column_index{};
    for (std::size_t c = 0; c < kCanonicalColumns.size(); ++c) {
        const std::string wanted = column_map.source_for(kCanonicalColumns[c]);
        bool found = false;
        for (std::size_t h = 0; h < header.size(); ++h) {
            if (header[h] == wanted) {
                column_index[c] = h;
                found = true;
                break;
            }
        }
        if (!found) {
            throw SchemaError("missing column '" + wanted + "' (canonical '" +
                              kCanonicalColumns[c] + "') in " + path.string());
        }
    }

    Recording rec;
    rec.user_id = user_id;
    rec.session_id = session_id;

    LoadStats local;
    std::string line;
    std::size_t row = 0;
    double last_t = 0.0;
    bool have_last = false;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty() || line == "\r") continue;
        const std::vector<std::string> fields = detail::split_csv_line(line);

        std::array<double, 22> v{};
        bool valid = true;
        for (std::size_t c = 0; c < 22 && valid; ++c) {
            if (column_index[c] >= fields.size() ||
                !detail::parse_double(fields[column_index[c]], v[c]) || !std::isfinite(v[c])) {
                valid = false;
            }
        }
        if (!valid) {
            ++local.rows_dropped_invalid;
            continue;
        }

        PoseFrame frame;
        frame.timestamp_s = v[0] * column_map.timestamp_scale;
        auto read_pose = [&](std::size_t base) {
            Pose p;
            p.position = {v[base], v[base + 1], v[base + 2]};
            p.rotation = {v[base + 3], v[base + 4], v[base + 5], v[base + 6]};
            return p;
        };
        frame.hmd = read_pose(1);
        frame.controller_left = read_pose(8);
        frame.controller_right = read_pose(15);

        if (frame.hmd.rotation.norm() < 1e-12 || frame.controller_left.rotation.norm() < 1e-12 ||
            frame.controller_right.rotation.norm() < 1e-12) {
            ++local.rows_dropped_invalid;
            continue;
        }
        frame.hmd.rotation = frame.hmd.rotation.normalized();
        frame.controller_left.rotation = frame.controller_left.rotation.normalized();
        frame.controller_right.rotation = frame.controller_right.rotation.normalized();

        if (have_last) {
            if (frame.timestamp_s == last_t) {
                ++local.rows_dropped_duplicate;
                continue;
            }
            if (frame.timestamp_s < last_t) {
                throw FormatError("non-monotonic timestamp at data row " + std::to_string(row) +
                                  " of " + path.string());
            }
        }
        last_t = frame.timestamp_s;
        have_last = true;
        rec.frames.push_back(frame);
    }

    if (rec.frames.size() < 2) {
        throw EmptyRecordingError(path.string() + " has fewer than 2 valid frames");
    }

    const double t0 = rec.frames.front().timestamp_s;
    for (PoseFrame& f : rec.frames) f.timestamp_s -= t0;
    rec.nominal_rate_hz = static_cast<double>(rec.frames.size() - 1) / rec.frames.back().timestamp_s;

    if (stats) *stats = local;
    return rec;
}

inline void save_recording(const Recording& rec, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write recording: " + path.string());
    for (std::size_t c = 0; c < kCanonicalColumns.size(); ++c) {
        if (c) out << ',';
        out << kCanonicalColumns[c];
    }
    out << '\n';
    auto put_pose = [&](const Pose& p) {
        out << ',' << detail::format_double(p.position.x)
            << ',' << detail::format_double(p.position.y)
            << ',' << detail::format_double(p.position.z)
            << ',' << detail::format_double(p.rotation.x)
            << ',' << detail::format_double(p.rotation.y)
            << ',' << detail::format_double(p.rotation.z)
            << ',' << detail::format_double(p.rotation.w);
    };
    for (const PoseFrame& f : rec.frames) {
        out << detail::format_double(f.timestamp_s);
        put_pose(f.hmd);
        put_pose(f.controller_left);
        put_pose(f.controller_right);
        out << '\n';
    }
    if (!out) throw IoError("write failed: " + path.string());
}

// Dataset roots hold one directory per user with session_<n>.csv files.
struct DatasetEntry {
    std::string user_id;
    int session_id = 1;
    std::filesystem::path path;
};

inline std::vector<DatasetEntry> scan_dataset(const std::filesystem::path& root) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(root)) throw IoError("dataset root is not a directory: " + root.string());
    std::vector<DatasetEntry> entries;
    for (const auto& user_dir : fs::directory_iterator(root)) {
        if (!user_dir.is_directory()) continue;
        for (const auto& file : fs::directory_iterator(user_dir.path())) {
            const std::string name = file.path().filename().string();
            if (name.rfind("session_", 0) != 0 || file.path().extension() != ".csv") continue;
            const std::string digits = name.substr(8, name.size() - 8 - 4);
            int session = 0;
            auto res = std::from_chars(digits.data(), digits.data() + digits.size(), session);
            if (res.ec != std::errc{} || session < 1) continue;
            entries.push_back({user_dir.path().filename().string(), session, file.path()});
        }
    }
    std::sort(entries.begin(), entries.end(), [](const DatasetEntry& a, const DatasetEntry& b) {
        return a.user_id != b.user_id ? a.user_id < b.user_id : a.session_id < b.session_id;
    });
    return entries;
}

} // namespace xrid
