#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "xrid/encoding.hpp"
#include "xrid/evaluate.hpp"
#include "xrid/search.hpp"
#include "xrid/synth.hpp"
#include "xrid/train.hpp"

using namespace xrid;
using Catch::Approx;

namespace {

// Tiny synthetic dataset encoded for fast training tests.
std::vector<FeatureSequence> tiny_dataset(int users, double minutes,
                                          EncodingKind kind = EncodingKind::BRA) {
    std::vector<FeatureSequence> dataset;
    for (int u = 0; u < users; ++u) {
        const SyntheticUserParams p = gen_user_params(derive_seed(77, static_cast<std::uint64_t>(u)));
        for (int s = 1; s <= 2; ++s) {
            Recording rec = gen_recording(p, minutes, 15.0, static_cast<std::uint64_t>(s));
            rec.user_id = "user_" + std::to_string(u);
            rec.session_id = s;
            dataset.push_back(encode(rec, kind));
        }
    }
    return dataset;
}

ModelConfig tiny_config(int classes) {
    ModelConfig cfg;
    cfg.architecture = Architecture::CNN;
    cfg.class_count = classes;
    cfg.cnn_kernel = 3;
    cfg.cnn_channels = {8};
    cfg.cnn_dropout = 0.1;
    cfg.learning_rate = 0.003;
    cfg.window_length = 30;
    return cfg;
}

TrainOptions tiny_options(std::uint64_t seed) {
    TrainOptions options;
    options.epochs_min = 4;
    options.max_epochs = 4;
    options.patience = 3;
    options.batch_size = 64;
    options.train_stride = 5;
    options.val_stride = 5;
    options.seed = seed;
    return options;
}

} // namespace

TEST_CASE("training is deterministic: same seed, byte-identical checkpoints") {
    const auto dataset = tiny_dataset(2, 1.0);
    SplitSpec split_spec;
    split_spec.validation_tail_min = 0.25;
    const Splits splits = split_sessions(dataset, split_spec);
    const ModelConfig config = tiny_config(splits.class_count);

    namespace fs = std::filesystem;
    const fs::path a_path = fs::temp_directory_path() / "xrid_det_a.ckpt";
    const fs::path b_path = fs::temp_directory_path() / "xrid_det_b.ckpt";
    for (int run = 0; run < 2; ++run) {
        const TrainResult result =
            train_model<double>(config, splits.train, splits.validation, tiny_options(123));
        save_checkpoint(result.checkpoint, run == 0 ? a_path : b_path);
    }
    std::ifstream a(a_path, std::ios::binary), b(b_path, std::ios::binary);
    const std::string bytes_a((std::istreambuf_iterator<char>(a)), std::istreambuf_iterator<char>());
    const std::string bytes_b((std::istreambuf_iterator<char>(b)), std::istreambuf_iterator<char>());
    REQUIRE(bytes_a.size() > 0);
    REQUIRE(bytes_a == bytes_b);
    fs::remove(a_path);
    fs::remove(b_path);
}

TEST_CASE("different seeds change the trained parameters") {
    const auto dataset = tiny_dataset(2, 1.0);
    SplitSpec split_spec;
    split_spec.validation_tail_min = 0.25;
    const Splits splits = split_sessions(dataset, split_spec);
    const ModelConfig config = tiny_config(splits.class_count);
    const TrainResult a =
        train_model<double>(config, splits.train, splits.validation, tiny_options(1));
    const TrainResult b =
        train_model<double>(config, splits.train, splits.validation, tiny_options(2));
    REQUIRE(a.checkpoint.params[0].values != b.checkpoint.params[0].values);
}

TEST_CASE("divergence raises a training error naming the epoch") {
    const auto dataset = tiny_dataset(2, 1.0);
    SplitSpec split_spec;
    split_spec.validation_tail_min = 0.25;
    const Splits splits = split_sessions(dataset, split_spec);
    ModelConfig config = tiny_config(splits.class_count);
    config.learning_rate = 1e18; // guaranteed blow-up
    REQUIRE_THROWS_AS(
        train_model<float>(config, splits.train, splits.validation, tiny_options(3)),
        TrainingError);
}

TEST_CASE("training rejects empty splits") {
    const auto dataset = tiny_dataset(2, 1.0);
    SplitSpec split_spec;
    split_spec.validation_tail_min = 0.25;
    const Splits splits = split_sessions(dataset, split_spec);
    const ModelConfig config = tiny_config(splits.class_count);
    REQUIRE_THROWS_AS(train_model<float>(config, {}, splits.validation, tiny_options(4)),
                      TrainingError);
    REQUIRE_THROWS_AS(train_model<float>(config, splits.train, {}, tiny_options(4)),
                      TrainingError);
}

TEST_CASE("random search stays inside the space and selects the argmax") {
    SearchSpace space;
    std::vector<double> scores = {0.3, 0.8, 0.8, 0.5};
    std::size_t call = 0;
    std::vector<ModelConfig> seen;
    const SearchResult result = random_search(
        Architecture::CNN, EncodingKind::BRA, 7, space, 4, 99,
        [&](const ModelConfig& cfg) {
            seen.push_back(cfg);
            return scores[call++];
        });
    REQUIRE(result.runs.size() == 4);
    REQUIRE(result.best_index == 1); // earliest of the tied 0.8s
    for (const ModelConfig& cfg : seen) {
        REQUIRE(cfg.cnn_kernel >= space.cnn_kernel_min);
        REQUIRE(cfg.cnn_kernel <= space.cnn_kernel_max);
        REQUIRE(static_cast<int>(cfg.cnn_channels.size()) >= space.cnn_layers_min);
        REQUIRE(static_cast<int>(cfg.cnn_channels.size()) <= space.cnn_layers_max);
        for (int c : cfg.cnn_channels) {
            REQUIRE(c >= space.cnn_channels_min);
            REQUIRE(c <= space.cnn_channels_max);
        }
        REQUIRE(cfg.cnn_dropout >= space.dropout_min);
        REQUIRE(cfg.cnn_dropout <= space.dropout_max);
        REQUIRE(cfg.learning_rate >= space.lr_min);
        REQUIRE(cfg.learning_rate <= space.lr_max);
        REQUIRE(cfg.class_count == 7);
    }
}

TEST_CASE("random search samples GRU parameters inside the space") {
    SearchSpace space;
    const SearchResult result = random_search(
        Architecture::GRU, EncodingKind::BRV, 5, space, 20, 7,
        [](const ModelConfig& cfg) { return 1.0 / (1.0 + cfg.gru_hidden); });
    for (const SearchRun& run : result.runs) {
        REQUIRE(run.config.gru_hidden >= space.gru_hidden_min);
        REQUIRE(run.config.gru_hidden <= space.gru_hidden_max);
        REQUIRE(run.config.gru_layers >= space.gru_layers_min);
        REQUIRE(run.config.gru_layers <= space.gru_layers_max);
    }
    // Selection = argmax over recorded scores (ties earliest).
    std::size_t expected = 0;
    for (std::size_t i = 0; i < result.runs.size(); ++i) {
        if (result.runs[i].score > result.runs[expected].score) expected = i;
    }
    REQUIRE(result.best_index == expected);
}

TEST_CASE("random search with budget one returns that single config") {
    SearchSpace space;
    const SearchResult result = random_search(Architecture::CNN, EncodingKind::BRA, 3, space, 1,
                                              11, [](const ModelConfig&) { return 0.42; });
    REQUIRE(result.runs.size() == 1);
    REQUIRE(result.best_index == 0);
    REQUIRE(result.best.class_count == 3);
}

TEST_CASE("random search rejects an empty budget") {
    SearchSpace space;
    REQUIRE_THROWS_AS(random_search(Architecture::CNN, EncodingKind::BRA, 3, space, 0, 1,
                                    [](const ModelConfig&) { return 0.0; }),
                      ParameterError);
}

TEST_CASE("eval grid on a degenerate single-user dataset is all ones") {
    const auto dataset = tiny_dataset(1, 1.0);
    SplitSpec split_spec;
    split_spec.validation_tail_min = 0.25;
    const Splits splits = split_sessions(dataset, split_spec);
    REQUIRE(splits.class_count == 1);

    EvalGridOptions options;
    options.t_enr_list = {TimeBudget::of(0.5), TimeBudget::all_data()};
    options.t_use_list = {TimeBudget::of(0.5), TimeBudget::all_data()};
    options.repeats = 2;
    options.train = tiny_options(5);
    const EvalReport report = eval_grid<float>(splits, tiny_config(1), options);
    for (const auto& row : report.cells) {
        for (const EvalCell& cell : row) {
            REQUIRE(cell.available);
            REQUIRE(cell.mean == 1.0);
            REQUIRE(cell.per_repeat.size() == 2);
        }
    }
}

TEST_CASE("eval grid marks infeasible budgets unavailable and writes csv") {
    const auto dataset = tiny_dataset(2, 1.0);
    SplitSpec split_spec;
    split_spec.validation_tail_min = 0.25;
    const Splits splits = split_sessions(dataset, split_spec);

    EvalGridOptions options;
    // 30 minutes of enrollment cannot be cut from 0.75 minutes of train data;
    // 0.02 min of use time (18 frames) is shorter than one 30-frame window.
    options.t_enr_list = {TimeBudget::of(0.5), TimeBudget::of(30.0)};
    options.t_use_list = {TimeBudget::of(0.5), TimeBudget::of(0.02)};
    options.repeats = 1;
    options.train = tiny_options(6);
    const EvalReport report = eval_grid<float>(splits, tiny_config(splits.class_count), options);

    REQUIRE(report.cells[0][0].available);
    REQUIRE_FALSE(report.cells[0][1].available); // t_use below one window
    REQUIRE_FALSE(report.cells[1][0].available); // t_enr infeasible
    REQUIRE_FALSE(report.cells[1][1].available);

    namespace fs = std::filesystem;
    const fs::path grid_path = fs::temp_directory_path() / "xrid_grid.csv";
    const fs::path class_path = fs::temp_directory_path() / "xrid_grid_class.csv";
    write_grid_csv(report, grid_path);
    write_per_class_csv(report, class_path);
    std::ifstream in(grid_path);
    std::string header;
    std::getline(in, header);
    REQUIRE(header == "t_enr,t_use,repeat,accuracy");
    std::string body((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    REQUIRE(body.find("unavailable") != std::string::npos);
    REQUIRE(body.find("30,0.5,,unavailable") != std::string::npos);
    const std::string summary = format_summary(report);
    REQUIRE(summary.find("t_enr\\t_use") != std::string::npos);
    fs::remove(grid_path);
    fs::remove(class_path);
}

TEST_CASE("grid evaluation is deterministic given the seed list") {
    const auto dataset = tiny_dataset(2, 1.0);
    SplitSpec split_spec;
    split_spec.validation_tail_min = 0.25;
    const Splits splits = split_sessions(dataset, split_spec);
    EvalGridOptions options;
    options.t_enr_list = {TimeBudget::of(0.5)};
    options.t_use_list = {TimeBudget::of(0.5)};
    options.repeats = 2;
    options.base_seed = 17;
    options.train = tiny_options(7);
    const EvalReport a = eval_grid<double>(splits, tiny_config(splits.class_count), options);
    const EvalReport b = eval_grid<double>(splits, tiny_config(splits.class_count), options);
    REQUIRE(a.cells[0][0].per_repeat == b.cells[0][0].per_repeat);
}

TEST_CASE("seed robustness with identical training data reports a finite spread") {
    const auto dataset = tiny_dataset(2, 1.0);
    SplitSpec split_spec;
    split_spec.validation_tail_min = 0.25;
    const Splits splits = split_sessions(dataset, split_spec);
    const SeedRobustness spread = seed_robustness<float>(
        splits, tiny_config(splits.class_count), tiny_options(8), 2, 55, /*eval_stride=*/5);
    REQUIRE(spread.per_seed_accuracy.size() == 2);
    REQUIRE(spread.range >= 0.0);
    REQUIRE(spread.range == Approx(spread.max_accuracy - spread.min_accuracy));
    REQUIRE_THROWS_AS(seed_robustness<float>(splits, tiny_config(splits.class_count),
                                             tiny_options(8), 1, 55),
                      ParameterError);
}

TEST_CASE("time budgets parse minutes and 'all'") {
    REQUIRE(parse_time_budget("all").all);
    REQUIRE(parse_time_budget("2.5").minutes == 2.5);
    REQUIRE_THROWS_AS(parse_time_budget("bogus"), ParameterError);
    REQUIRE_THROWS_AS(parse_time_budget("-3"), ParameterError);
    REQUIRE(TimeBudget::of(7).str() == "7");
    REQUIRE(TimeBudget::all_data().str() == "all");
}
