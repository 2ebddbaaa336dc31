// xrid: motion-based XR user identification pipeline.
//
// Subcommands cover the full workflow: synthetic dataset generation,
// ingestion (validate/resample/trim), travel statistics, feature encoding,
// training, single-segment identification, the enrollment/use-time accuracy
// grid, random hyperparameter search, and gradient verification.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "xrid/encoding.hpp"
#include "xrid/error.hpp"
#include "xrid/evaluate.hpp"
#include "xrid/gradcheck.hpp"
#include "xrid/identify.hpp"
#include "xrid/manifest.hpp"
#include "xrid/metrics.hpp"
#include "xrid/model.hpp"
#include "xrid/motion_csv.hpp"
#include "xrid/parallel.hpp"
#include "xrid/recording.hpp"
#include "xrid/sampling.hpp"
#include "xrid/search.hpp"
#include "xrid/synth.hpp"
#include "xrid/train.hpp"

namespace fs = std::filesystem;
using namespace xrid;

namespace {

// ---------------------------------------------------------------------------
// Shared option bundles

struct IoOptions {
    std::string root;
    std::string column_map_path;
    double target_hz = 15.0;
    double trim_head_s = 0.0;
    double trim_tail_s = 0.0;
};

struct ModelOptions {
    std::string arch = "cnn";
    std::string encoding = "bra";
    bool preset = false;
    int kernel = 3;
    std::vector<int> channels = {32, 64};
    double cnn_dropout = 0.2;
    int hidden = 256;
    int layers = 2;
    double gru_dropout = 0.1;
    double learning_rate = 0.002;
    int window = 300;
};

struct TrainCliOptions {
    int epochs_min = 30;
    int max_epochs = 1000;
    int patience = 10;
    int batch = 256;
    int train_stride = 15;
    int val_stride = 15;
    double val_tail_min = 5.0;
    std::string enrollment = "all";
    std::uint64_t enrollment_seed = 0;
    bool no_normalize = false;
    std::uint64_t seed = 0;
    std::string precision = "f32";
    bool verbose = false;
};

void add_io_options(CLI::App* cmd, IoOptions& io, bool with_prep = true) {
    cmd->add_option("--root", io.root, "dataset root (<root>/<user>/session_<n>.csv)")
        ->required();
    cmd->add_option("--column-map", io.column_map_path,
                    "key=value file mapping canonical columns to source headers");
    if (with_prep) {
        cmd->add_option("--target-hz", io.target_hz,
                        "resample recordings to this rate (0 = keep native)");
        cmd->add_option("--trim-head", io.trim_head_s, "seconds to drop from the start");
        cmd->add_option("--trim-tail", io.trim_tail_s, "seconds to drop from the end");
    }
}

void add_model_options(CLI::App* cmd, ModelOptions& model) {
    cmd->add_option("--arch", model.arch, "architecture: cnn or gru")
        ->check(CLI::IsMember({"cnn", "gru"}));
    cmd->add_option("--encoding", model.encoding, "feature encoding: br, brv or bra")
        ->check(CLI::IsMember({"br", "brv", "bra"}));
    cmd->add_flag("--preset", model.preset,
                  "use the tuned 71-user benchmark configuration for arch+encoding");
    cmd->add_option("--kernel", model.kernel, "cnn kernel size");
    cmd->add_option("--channels", model.channels, "cnn channel sizes per layer")
        ->delimiter(',');
    cmd->add_option("--cnn-dropout", model.cnn_dropout, "cnn dropout rate");
    cmd->add_option("--hidden", model.hidden, "gru hidden size");
    cmd->add_option("--layers", model.layers, "gru layer count");
    cmd->add_option("--gru-dropout", model.gru_dropout, "gru inter-layer dropout");
    cmd->add_option("--lr", model.learning_rate, "learning rate");
    cmd->add_option("--window", model.window, "window length in frames");
}

void add_train_options(CLI::App* cmd, TrainCliOptions& train) {
    cmd->add_option("--epochs-min", train.epochs_min, "minimum training epochs");
    cmd->add_option("--max-epochs", train.max_epochs, "hard epoch cap");
    cmd->add_option("--patience", train.patience, "early-stop patience in epochs");
    cmd->add_option("--batch", train.batch, "batch size in windows");
    cmd->add_option("--train-stride", train.train_stride, "training window stride in frames");
    cmd->add_option("--val-stride", train.val_stride, "validation window stride in frames");
    cmd->add_option("--val-tail-min", train.val_tail_min,
                    "session-1 tail reserved for validation, minutes");
    cmd->add_option("--enrollment", train.enrollment,
                    "enrollment minutes per user, or 'all'");
    cmd->add_option("--enrollment-seed", train.enrollment_seed,
                    "seed for the random enrollment offset");
    cmd->add_flag("--no-normalize", train.no_normalize, "disable feature standardization");
    cmd->add_option("--seed", train.seed, "training seed");
    cmd->add_option("--precision", train.precision,
                    "f32 for training, f64 for verification mode")
        ->check(CLI::IsMember({"f32", "f64"}));
    cmd->add_flag("--verbose", train.verbose, "per-epoch progress on stderr");
}

ModelConfig make_model_config(const ModelOptions& model, int class_count) {
    const Architecture arch = parse_architecture(model.arch);
    const EncodingKind encoding = parse_encoding(model.encoding);
    ModelConfig cfg;
    if (model.preset) {
        cfg = preset_config(arch, encoding);
    } else {
        cfg.architecture = arch;
        cfg.encoding = encoding;
        cfg.cnn_kernel = model.kernel;
        cfg.cnn_channels = model.channels;
        cfg.cnn_dropout = model.cnn_dropout;
        cfg.gru_hidden = model.hidden;
        cfg.gru_layers = model.layers;
        cfg.gru_dropout = model.gru_dropout;
        cfg.learning_rate = model.learning_rate;
    }
    cfg.window_length = model.window;
    cfg.class_count = class_count;
    return cfg;
}

TrainOptions make_train_options(const TrainCliOptions& cli) {
    TrainOptions options;
    options.epochs_min = cli.epochs_min;
    options.max_epochs = cli.max_epochs;
    options.patience = cli.patience;
    options.batch_size = cli.batch;
    options.train_stride = cli.train_stride;
    options.val_stride = cli.val_stride;
    options.normalize = !cli.no_normalize;
    options.seed = cli.seed;
    options.verbose = cli.verbose;
    return options;
}

// Records every resolved option value of a subcommand into the manifest.
void record_options(const CLI::App* cmd, RunManifest& manifest) {
    for (const CLI::Option* opt : cmd->get_options()) {
        std::string name;
        if (!opt->get_lnames().empty()) name = opt->get_lnames().front();
        if (name.empty() || name == "help" || name == "config") continue;
        std::string value;
        if (opt->count() > 0) {
            const auto& results = opt->results();
            for (std::size_t i = 0; i < results.size(); ++i) {
                if (i) value += ',';
                value += results[i];
            }
        } else {
            value = opt->get_default_str();
        }
        manifest.set(name, value);
    }
}

ColumnMap load_map_if_given(const std::string& path) {
    if (path.empty()) return {};
    return load_column_map(path);
}

Recording prepare_recording(Recording rec, const IoOptions& io) {
    if (io.target_hz > 0.0 && std::abs(rec.nominal_rate_hz - io.target_hz) > 1e-6) {
        rec = resample(rec, io.target_hz);
    }
    if (io.trim_head_s > 0.0 || io.trim_tail_s > 0.0) {
        rec = trim(rec, io.trim_head_s, io.trim_tail_s);
    }
    return rec;
}

std::vector<FeatureSequence> load_and_encode(const IoOptions& io, EncodingKind kind,
                                             RunManifest* manifest) {
    const ColumnMap map = load_map_if_given(io.column_map_path);
    const auto entries = scan_dataset(io.root);
    if (entries.empty()) throw IoError("no recordings found under " + io.root);
    std::vector<FeatureSequence> dataset;
    dataset.reserve(entries.size());
    for (const DatasetEntry& entry : entries) {
        if (manifest) manifest->add_input(entry.path);
        Recording rec = load_recording(entry.path, map, entry.user_id, entry.session_id);
        rec = prepare_recording(std::move(rec), io);
        dataset.push_back(encode(rec, kind));
    }
    return dataset;
}

void write_history_csv(const std::vector<EpochStats>& history, const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write history: " + path.string());
    out << "epoch,train_loss,val_macro_accuracy,val_min_accuracy\n";
    char buf[64];
    for (const EpochStats& row : history) {
        std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g\n", row.epoch, row.train_loss,
                      row.val_macro, row.val_min);
        out << buf;
    }
}

void write_labels(const Splits& splits, const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write labels: " + path.string());
    for (const auto& [user, label] : splits.label_of_user) {
        out << label << '=' << user << '\n';
    }
}

std::map<int, std::string> read_labels(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open labels file: " + path.string());
    std::map<int, std::string> labels;
    std::string line;
    while (std::getline(in, line)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        labels[std::stoi(line.substr(0, eq))] = line.substr(eq + 1);
    }
    return labels;
}

// Applies the per-user enrollment restriction to the train split.
std::vector<SequenceSlice> apply_enrollment(const Splits& splits, const std::string& enrollment,
                                            std::uint64_t enrollment_seed) {
    if (enrollment == "all") return splits.train;
    const TimeBudget budget = parse_time_budget(enrollment);
    std::vector<SequenceSlice> slices;
    slices.reserve(splits.train.size());
    for (const SequenceSlice& slice : splits.train) {
        slices.push_back(select_enrollment(slice, budget.all ? -1.0 : budget.minutes,
                                           derive_seed(enrollment_seed,
                                                       static_cast<std::uint64_t>(slice.label))));
    }
    return slices;
}

// ---------------------------------------------------------------------------
// Subcommand implementations

int run_synth(const fs::path& out_dir, const SynthDatasetSpec& spec, const CLI::App* cmd) {
    const auto entries = write_synthetic_dataset(out_dir, spec);
    RunManifest manifest("synth");
    record_options(cmd, manifest);
    for (const auto& entry : entries) manifest.add_output(entry.path);
    manifest.write(out_dir / "manifest.txt");
    std::printf("wrote %zu recordings under %s\n", entries.size(), out_dir.string().c_str());
    return 0;
}

int run_ingest(const IoOptions& io, const fs::path& out_dir, const CLI::App* cmd) {
    const ColumnMap map = load_map_if_given(io.column_map_path);
    const auto entries = scan_dataset(io.root);
    if (entries.empty()) throw IoError("no recordings found under " + io.root);
    RunManifest manifest("ingest");
    record_options(cmd, manifest);
    fs::create_directories(out_dir);
    for (const DatasetEntry& entry : entries) {
        manifest.add_input(entry.path);
        LoadStats stats;
        Recording rec = load_recording(entry.path, map, entry.user_id, entry.session_id, &stats);
        rec = prepare_recording(std::move(rec), io);
        const fs::path user_dir = out_dir / entry.user_id;
        fs::create_directories(user_dir);
        const fs::path out_path =
            user_dir / ("session_" + std::to_string(entry.session_id) + ".csv");
        save_recording(rec, out_path);
        manifest.add_output(out_path);
        std::printf("%s session %d: %zu frames at %.3f Hz", entry.user_id.c_str(),
                    entry.session_id, rec.frames.size(), rec.nominal_rate_hz);
        if (stats.rows_dropped_invalid || stats.rows_dropped_duplicate) {
            std::printf("  (dropped %zu invalid, %zu duplicate rows)", stats.rows_dropped_invalid,
                        stats.rows_dropped_duplicate);
        }
        std::printf("\n");
    }
    manifest.write(out_dir / "manifest.txt");
    return 0;
}

int run_stats(const IoOptions& io, const std::string& out_csv, const CLI::App* cmd) {
    const ColumnMap map = load_map_if_given(io.column_map_path);
    const auto entries = scan_dataset(io.root);
    if (entries.empty()) throw IoError("no recordings found under " + io.root);

    struct Row {
        std::string user;
        int session;
        TravelStats stats;
    };
    std::vector<Row> rows;
    for (const DatasetEntry& entry : entries) {
        const Recording rec = load_recording(entry.path, map, entry.user_id, entry.session_id);
        rows.push_back({entry.user_id, entry.session_id, travel_stats(rec)});
    }
    std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
        return a.stats.meters_per_minute > b.stats.meters_per_minute;
    });
    std::printf("%-16s %-8s %12s %12s %12s\n", "user", "session", "duration_min", "total_m",
                "m_per_min");
    for (const Row& row : rows) {
        std::printf("%-16s %-8d %12.2f %12.2f %12.2f\n", row.user.c_str(), row.session,
                    row.stats.duration_min, row.stats.total_horizontal_path_m,
                    row.stats.meters_per_minute);
    }
    if (!out_csv.empty()) {
        std::ofstream out(out_csv);
        if (!out) throw IoError("cannot write stats csv: " + out_csv);
        out << "user,session,duration_min,total_horizontal_path_m,meters_per_minute\n";
        for (const Row& row : rows) {
            out << row.user << ',' << row.session << ',' << row.stats.duration_min << ','
                << row.stats.total_horizontal_path_m << ',' << row.stats.meters_per_minute << '\n';
        }
        RunManifest manifest("stats");
        record_options(cmd, manifest);
        manifest.add_output(out_csv);
        manifest.write(fs::path(out_csv).parent_path() / "stats_manifest.txt");
    }
    return 0;
}

int run_encode(const std::string& in_path, const std::string& out_path,
               const std::string& column_map_path, const std::string& encoding,
               const std::string& user, int session, double target_hz) {
    IoOptions io;
    io.column_map_path = column_map_path;
    io.target_hz = target_hz;
    const ColumnMap map = load_map_if_given(column_map_path);
    Recording rec = load_recording(in_path, map, user, session);
    rec = prepare_recording(std::move(rec), io);
    const FeatureSequence seq = encode(rec, parse_encoding(encoding));
    write_feature_csv(seq, out_path);
    std::printf("%s: %zu frames -> %zu %s feature frames\n", in_path.c_str(), rec.frames.size(),
                seq.frames.size(), to_string(seq.kind));
    return 0;
}

template <typename S>
int run_train_typed(const IoOptions& io, const ModelOptions& model, const TrainCliOptions& cli,
                    const fs::path& out_dir, const CLI::App* cmd) {
    RunManifest manifest("train");
    record_options(cmd, manifest);

    const EncodingKind kind = parse_encoding(model.encoding);
    const auto dataset = load_and_encode(io, kind, &manifest);

    SplitSpec split_spec;
    split_spec.validation_tail_min = cli.val_tail_min;
    split_spec.enrollment_seed = cli.enrollment_seed;
    const Splits splits = split_sessions(dataset, split_spec);
    const auto enrollment = apply_enrollment(splits, cli.enrollment, cli.enrollment_seed);

    const ModelConfig config = make_model_config(model, splits.class_count);
    const TrainOptions options = make_train_options(cli);

    const TrainResult result = train_model<S>(config, enrollment, splits.validation, options);

    fs::create_directories(out_dir);
    const fs::path ckpt_path = out_dir / "checkpoint.ckpt";
    save_checkpoint(result.checkpoint, ckpt_path);
    write_history_csv(result.history, out_dir / "history.csv");
    write_labels(splits, out_dir / "labels.txt");
    write_split_manifest(splits, enrollment, split_spec, out_dir / "split_manifest.txt");
    manifest.add_output(ckpt_path);
    manifest.add_output(out_dir / "history.csv");
    manifest.add_output(out_dir / "labels.txt");
    manifest.add_output(out_dir / "split_manifest.txt");
    manifest.write(out_dir / "manifest.txt");

    std::printf("trained %s+%s: best epoch %d, val min accuracy %.4f, val macro %.4f\n",
                to_string(config.architecture), to_string(config.encoding), result.best_epoch,
                result.checkpoint.meta.val_min_accuracy,
                result.checkpoint.meta.val_macro_accuracy);
    std::printf("checkpoint: %s\n", ckpt_path.string().c_str());
    return 0;
}

int run_identify(const std::string& checkpoint_path, const std::string& in_path,
                 const std::string& column_map_path, const std::string& labels_path,
                 double target_hz, const std::string& precision) {
    const Checkpoint ckpt = load_checkpoint(checkpoint_path);
    IoOptions io;
    io.column_map_path = column_map_path;
    io.target_hz = target_hz;
    const ColumnMap map = load_map_if_given(column_map_path);
    Recording rec = load_recording(in_path, map, "query", 1);
    rec = prepare_recording(std::move(rec), io);
    const FeatureSequence seq = encode(rec, ckpt.config.encoding);
    const SequenceSlice segment{&seq, 0, seq.frames.size(), 0};

    WindowSpec spec;
    spec.length_frames = ckpt.config.window_length;

    VoteResult vote;
    if (precision == "f64") {
        auto model = restore_model<double>(ckpt);
        vote = identify_segment(*model, ckpt.norm, segment, spec);
    } else {
        auto model = restore_model<float>(ckpt);
        vote = identify_segment(*model, ckpt.norm, segment, spec);
    }

    std::map<int, std::string> labels;
    if (!labels_path.empty()) labels = read_labels(labels_path);
    auto class_name = [&](int c) {
        auto it = labels.find(c);
        return it == labels.end() ? std::string("class ") + std::to_string(c) : it->second;
    };
    std::printf("predicted: %s (%d votes of %d windows)\n", class_name(vote.predicted).c_str(),
                vote.vote_counts[static_cast<std::size_t>(vote.predicted)], vote.window_count);
    for (std::size_t c = 0; c < vote.vote_counts.size(); ++c) {
        if (vote.vote_counts[c] == 0) continue;
        std::printf("  %-20s votes %6d  cumulative prob %10.3f\n",
                    class_name(static_cast<int>(c)).c_str(), vote.vote_counts[c],
                    vote.cumulative_prob[c]);
    }
    return 0;
}

template <typename S>
int run_evaluate_typed(const IoOptions& io, const ModelOptions& model, const TrainCliOptions& cli,
                       const std::vector<std::string>& t_enr, const std::vector<std::string>& t_use,
                       int repeats, std::uint64_t base_seed, const fs::path& out_dir,
                       const CLI::App* cmd) {
    RunManifest manifest("evaluate");
    record_options(cmd, manifest);

    const EncodingKind kind = parse_encoding(model.encoding);
    const auto dataset = load_and_encode(io, kind, &manifest);
    SplitSpec split_spec;
    split_spec.validation_tail_min = cli.val_tail_min;
    const Splits splits = split_sessions(dataset, split_spec);

    EvalGridOptions options;
    options.t_enr_list.clear();
    for (const std::string& s : t_enr) options.t_enr_list.push_back(parse_time_budget(s));
    options.t_use_list.clear();
    for (const std::string& s : t_use) options.t_use_list.push_back(parse_time_budget(s));
    options.repeats = repeats;
    options.base_seed = base_seed;
    options.train = make_train_options(cli);
    options.batch_size = cli.batch;
    options.verbose = cli.verbose;

    const ModelConfig config = make_model_config(model, splits.class_count);
    const EvalReport report = eval_grid<S>(splits, config, options);

    fs::create_directories(out_dir);
    write_grid_csv(report, out_dir / "grid.csv");
    write_per_class_csv(report, out_dir / "per_class.csv");
    const std::string summary = format_summary(report);
    {
        std::ofstream out(out_dir / "summary.txt");
        out << summary;
    }
    manifest.add_output(out_dir / "grid.csv");
    manifest.add_output(out_dir / "per_class.csv");
    manifest.add_output(out_dir / "summary.txt");
    manifest.write(out_dir / "manifest.txt");
    std::fputs(summary.c_str(), stdout);
    return 0;
}

template <typename S>
int run_search_typed(const IoOptions& io, const std::string& arch, const std::string& encoding,
                     int budget, std::uint64_t seed, const TrainCliOptions& cli,
                     const fs::path& out_dir, const CLI::App* cmd) {
    RunManifest manifest("search");
    record_options(cmd, manifest);

    const EncodingKind kind = parse_encoding(encoding);
    const auto dataset = load_and_encode(io, kind, &manifest);
    SplitSpec split_spec;
    split_spec.validation_tail_min = cli.val_tail_min;
    const Splits splits = split_sessions(dataset, split_spec);
    const auto enrollment = apply_enrollment(splits, cli.enrollment, cli.enrollment_seed);

    const TrainOptions base_options = make_train_options(cli);
    int run_index = 0;
    const SearchResult result = random_search(
        parse_architecture(arch), kind, splits.class_count, SearchSpace{}, budget, seed,
        [&](const ModelConfig& sampled) {
            ModelConfig cfg = sampled;
            cfg.window_length = 300;
            TrainOptions options = base_options;
            options.seed = derive_seed(seed, static_cast<std::uint64_t>(run_index));
            const TrainResult trained =
                train_model<S>(cfg, enrollment, splits.validation, options);
            const double score = trained.checkpoint.meta.val_min_accuracy;
            std::printf("run %3d: val min accuracy %.4f (best epoch %d)\n", run_index, score,
                        trained.best_epoch);
            ++run_index;
            return score;
        });

    fs::create_directories(out_dir);
    const fs::path runs_path = out_dir / "runs.csv";
    {
        std::ofstream out(runs_path);
        out << "run,score,architecture,encoding,lr,gru_hidden,gru_layers,gru_dropout,"
               "cnn_kernel,cnn_channels,cnn_dropout\n";
        for (std::size_t i = 0; i < result.runs.size(); ++i) {
            const ModelConfig& cfg = result.runs[i].config;
            out << i << ',' << result.runs[i].score << ',' << to_string(cfg.architecture) << ','
                << to_string(cfg.encoding) << ',' << cfg.learning_rate << ',' << cfg.gru_hidden
                << ',' << cfg.gru_layers << ',' << cfg.gru_dropout << ',' << cfg.cnn_kernel << ',';
            for (std::size_t c = 0; c < cfg.cnn_channels.size(); ++c) {
                if (c) out << ';';
                out << cfg.cnn_channels[c];
            }
            out << ',' << cfg.cnn_dropout << '\n';
        }
    }
    manifest.add_output(runs_path);
    manifest.write(out_dir / "manifest.txt");
    std::printf("best run %zu with val min accuracy %.4f\n", result.best_index,
                result.runs[result.best_index].score);
    return 0;
}

int run_gradcheck(std::size_t probes, bool verbose) {
    double worst = 0.0;
    for (const ModelConfig& cfg : gradcheck_configs()) {
        const GradCheckResult result = gradcheck_model(cfg, 4, probes);
        if (verbose) {
            std::printf("%s: %zu probes, max relative error %.3e (%s)\n",
                        to_string(cfg.architecture), result.probes, result.max_rel_error,
                        result.worst_param.c_str());
        }
        worst = std::max(worst, result.max_rel_error);
    }
    std::printf("max relative error %.3e\n", worst);
    return worst < 1e-4 ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"motion-based XR user identification pipeline"};
    app.require_subcommand(1);
    int jobs = 0;
    app.add_option("--jobs", jobs, "cap worker threads (0 = hardware default)");

    // synth
    auto* synth_cmd = app.add_subcommand("synth", "generate a deterministic synthetic dataset");
    std::string synth_out;
    SynthDatasetSpec synth_spec;
    synth_cmd->add_option("--out", synth_out, "output dataset root")->required();
    synth_cmd->add_option("--users", synth_spec.users, "number of users");
    synth_cmd->add_option("--sessions", synth_spec.sessions, "sessions per user");
    synth_cmd->add_option("--minutes", synth_spec.duration_min, "minutes per session");
    synth_cmd->add_option("--rate", synth_spec.rate_hz, "frame rate in Hz");
    synth_cmd->add_option("--seed", synth_spec.base_seed, "base seed");
    synth_cmd->set_config("--config");

    // ingest
    auto* ingest_cmd = app.add_subcommand("ingest", "validate, resample and trim raw recordings");
    IoOptions ingest_io;
    ingest_io.trim_head_s = 60.0;
    ingest_io.trim_tail_s = 60.0;
    std::string ingest_out;
    add_io_options(ingest_cmd, ingest_io);
    ingest_cmd->add_option("--out", ingest_out, "output dataset root")->required();
    ingest_cmd->set_config("--config");

    // stats
    auto* stats_cmd = app.add_subcommand("stats", "travel-path statistics per recording");
    IoOptions stats_io;
    std::string stats_out;
    add_io_options(stats_cmd, stats_io, /*with_prep=*/false);
    stats_cmd->add_option("--out", stats_out, "also write the table as csv");
    stats_cmd->set_config("--config");

    // encode
    auto* encode_cmd = app.add_subcommand("encode", "dump the 18-feature encoding of one recording");
    std::string encode_in, encode_out, encode_map, encode_user = "user", encode_kind = "bra";
    int encode_session = 1;
    double encode_hz = 15.0;
    encode_cmd->add_option("--in", encode_in, "input recording csv")->required();
    encode_cmd->add_option("--out", encode_out, "output feature csv")->required();
    encode_cmd->add_option("--encoding", encode_kind, "br, brv or bra")
        ->check(CLI::IsMember({"br", "brv", "bra"}));
    encode_cmd->add_option("--column-map", encode_map, "column mapping file");
    encode_cmd->add_option("--user", encode_user, "user id recorded in the sequence");
    encode_cmd->add_option("--session", encode_session, "session id");
    encode_cmd->add_option("--target-hz", encode_hz, "resample rate (0 = keep native)");
    encode_cmd->set_config("--config");

    // train
    auto* train_cmd = app.add_subcommand("train", "train a window classifier");
    IoOptions train_io;
    ModelOptions train_model_opts;
    TrainCliOptions train_cli;
    std::string train_out;
    add_io_options(train_cmd, train_io);
    add_model_options(train_cmd, train_model_opts);
    add_train_options(train_cmd, train_cli);
    train_cmd->add_option("--out", train_out, "run output directory")->required();
    train_cmd->set_config("--config");

    // identify
    auto* identify_cmd = app.add_subcommand("identify", "majority-vote identification of one segment");
    std::string id_ckpt, id_in, id_map, id_labels, id_precision = "f32";
    double id_hz = 15.0;
    identify_cmd->add_option("--checkpoint", id_ckpt, "trained checkpoint")->required();
    identify_cmd->add_option("--in", id_in, "recording csv to identify")->required();
    identify_cmd->add_option("--column-map", id_map, "column mapping file");
    identify_cmd->add_option("--labels", id_labels, "labels.txt from the training run");
    identify_cmd->add_option("--target-hz", id_hz, "resample rate (0 = keep native)");
    identify_cmd->add_option("--precision", id_precision, "f32 or f64")
        ->check(CLI::IsMember({"f32", "f64"}));
    identify_cmd->set_config("--config");

    // evaluate
    auto* eval_cmd = app.add_subcommand("evaluate", "enrollment x use-time accuracy grid");
    IoOptions eval_io;
    ModelOptions eval_model;
    TrainCliOptions eval_cli;
    std::vector<std::string> eval_t_enr = {"1", "5", "10", "15", "20", "25", "all"};
    std::vector<std::string> eval_t_use;
    int eval_repeats = 5;
    std::uint64_t eval_seed = 0;
    std::string eval_out;
    for (int m = 1; m <= 25; ++m) eval_t_use.push_back(std::to_string(m));
    eval_t_use.push_back("all");
    add_io_options(eval_cmd, eval_io);
    add_model_options(eval_cmd, eval_model);
    add_train_options(eval_cmd, eval_cli);
    eval_cmd->add_option("--t-enr", eval_t_enr, "enrollment budgets in minutes, or 'all'")
        ->delimiter(',');
    eval_cmd->add_option("--t-use", eval_t_use, "use-time budgets in minutes, or 'all'")
        ->delimiter(',');
    eval_cmd->add_option("--repeats", eval_repeats, "retrainings per enrollment budget");
    eval_cmd->add_option("--grid-seed", eval_seed, "base seed for enrollment slices and training");
    eval_cmd->add_option("--out", eval_out, "run output directory")->required();
    eval_cmd->set_config("--config");

    // search
    auto* search_cmd = app.add_subcommand("search", "random hyperparameter search");
    IoOptions search_io;
    TrainCliOptions search_cli;
    std::string search_arch = "cnn", search_encoding = "bra", search_out;
    int search_budget = 10;
    std::uint64_t search_seed = 0;
    add_io_options(search_cmd, search_io);
    add_train_options(search_cmd, search_cli);
    search_cmd->add_option("--arch", search_arch, "architecture to search")
        ->check(CLI::IsMember({"cnn", "gru"}));
    search_cmd->add_option("--encoding", search_encoding, "feature encoding")
        ->check(CLI::IsMember({"br", "brv", "bra"}));
    search_cmd->add_option("--budget", search_budget, "number of sampled configurations");
    search_cmd->add_option("--search-seed", search_seed, "seed for the sampler");
    search_cmd->add_option("--out", search_out, "run output directory")->required();
    search_cmd->set_config("--config");

    // gradcheck
    auto* grad_cmd = app.add_subcommand("gradcheck", "finite-difference gradient verification");
    std::size_t grad_probes = 40;
    bool grad_verbose = false;
    grad_cmd->add_option("--probes", grad_probes,
                         "probes per parameter tensor (0 = every scalar)");
    grad_cmd->add_flag("--verbose", grad_verbose, "per-architecture detail");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::string commands;
        for (const CLI::App* sub : app.get_subcommands({})) {
            if (!commands.empty()) commands += "|";
            commands += sub->get_name();
        }
        std::fprintf(stderr, "error: usage-error: %s (valid subcommands: %s)\n", e.what(),
                     commands.c_str());
        return 2;
    }

    set_job_limit(jobs);

    try {
        if (app.got_subcommand(synth_cmd)) return run_synth(synth_out, synth_spec, synth_cmd);
        if (app.got_subcommand(ingest_cmd)) return run_ingest(ingest_io, ingest_out, ingest_cmd);
        if (app.got_subcommand(stats_cmd)) return run_stats(stats_io, stats_out, stats_cmd);
        if (app.got_subcommand(encode_cmd)) {
            return run_encode(encode_in, encode_out, encode_map, encode_kind, encode_user,
                              encode_session, encode_hz);
        }
        if (app.got_subcommand(train_cmd)) {
            return train_cli.precision == "f64"
                       ? run_train_typed<double>(train_io, train_model_opts, train_cli, train_out,
                                                 train_cmd)
                       : run_train_typed<float>(train_io, train_model_opts, train_cli, train_out,
                                                train_cmd);
        }
        if (app.got_subcommand(identify_cmd)) {
            return run_identify(id_ckpt, id_in, id_map, id_labels, id_hz, id_precision);
        }
        if (app.got_subcommand(eval_cmd)) {
            return eval_cli.precision == "f64"
                       ? run_evaluate_typed<double>(eval_io, eval_model, eval_cli, eval_t_enr,
                                                    eval_t_use, eval_repeats, eval_seed, eval_out,
                                                    eval_cmd)
                       : run_evaluate_typed<float>(eval_io, eval_model, eval_cli, eval_t_enr,
                                                   eval_t_use, eval_repeats, eval_seed, eval_out,
                                                   eval_cmd);
        }
        if (app.got_subcommand(search_cmd)) {
            return search_cli.precision == "f64"
                       ? run_search_typed<double>(search_io, search_arch, search_encoding,
                                                  search_budget, search_seed, search_cli,
                                                  search_out, search_cmd)
                       : run_search_typed<float>(search_io, search_arch, search_encoding,
                                                 search_budget, search_seed, search_cli,
                                                 search_out, search_cmd);
        }
        if (app.got_subcommand(grad_cmd)) return run_gradcheck(grad_probes, grad_verbose);
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: internal-error: %s\n", e.what());
        return 1;
    }
    std::fprintf(stderr, "error: usage-error: no subcommand given\n");
    return 2;
}
