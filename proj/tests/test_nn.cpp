#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "xrid/adam.hpp"
#include "xrid/checkpoint.hpp"
#include "xrid/gradcheck.hpp"
#include "xrid/layers.hpp"
#include "xrid/loss.hpp"
#include "xrid/model.hpp"
#include "xrid/rng.hpp"
#include "xrid/train.hpp"

using namespace xrid;
using Catch::Approx;

namespace {

ModelConfig tiny_cnn(int classes = 5, int window = 12) {
    ModelConfig cfg;
    cfg.architecture = Architecture::CNN;
    cfg.class_count = classes;
    cfg.cnn_kernel = 3;
    cfg.cnn_channels = {8, 16};
    cfg.cnn_dropout = 0.0;
    cfg.window_length = window;
    cfg.learning_rate = 0.001;
    return cfg;
}

ModelConfig tiny_gru(int classes = 5, int window = 12) {
    ModelConfig cfg;
    cfg.architecture = Architecture::GRU;
    cfg.class_count = classes;
    cfg.gru_hidden = 8;
    cfg.gru_layers = 2;
    cfg.gru_dropout = 0.0;
    cfg.window_length = window;
    cfg.learning_rate = 0.001;
    return cfg;
}

} // namespace

TEST_CASE("single conv layer matches a hand-rolled convolution") {
    // 1 channel in/out, kernel 3, same padding, constant input of length 5.
    Conv1d<double> conv(1, 1, 3);
    conv.weight().values = {0.5, -1.0, 2.0}; // w[k], offsets -1, 0, +1
    conv.bias().values = {0.25};
    Tensor<double> x({1, 1, 5});
    for (double& v : x.values) v = 3.0;
    const Tensor<double> y = conv.forward(x);
    // Interior: 0.25 + 3*(0.5 - 1.0 + 2.0) = 4.75
    // Left edge (no w0 tap): 0.25 + 3*(-1.0 + 2.0) = 3.25
    // Right edge (no w2 tap): 0.25 + 3*(0.5 - 1.0) = -1.25
    REQUIRE(y.values[0] == Approx(3.25).margin(1e-9));
    REQUIRE(y.values[1] == Approx(4.75).margin(1e-9));
    REQUIRE(y.values[2] == Approx(4.75).margin(1e-9));
    REQUIRE(y.values[3] == Approx(4.75).margin(1e-9));
    REQUIRE(y.values[4] == Approx(-1.25).margin(1e-9));
}

TEST_CASE("zero-initialized CNN gives uniform softmax over 71 classes") {
    ModelConfig cfg = tiny_cnn(71, 300);
    CnnModel<double> model(cfg);
    Tensor<double> input({2, 300, 18}); // all zeros
    const Tensor<double> logits = model.forward(input);
    for (double v : logits.values) REQUIRE(v == 0.0);
    std::vector<double> probs(71);
    softmax_row(logits.data(), 71, probs.data());
    double sum = 0.0;
    for (double p : probs) {
        REQUIRE(p == Approx(1.0 / 71.0).epsilon(1e-12));
        sum += p;
    }
    REQUIRE(sum == Approx(1.0).margin(1e-9));
}

TEST_CASE("zero-weight GRU keeps a zero hidden state and bias logits") {
    ModelConfig cfg = tiny_gru(4, 10);
    GruModel<double> model(cfg);
    auto params = model.params();
    // Leave everything zero except the head bias.
    for (auto& p : params) {
        if (p.name == "head.bias") {
            for (std::size_t k = 0; k < p.tensor->size(); ++k) {
                p.tensor->values[k] = 0.5 + static_cast<double>(k);
            }
        }
    }
    Tensor<double> input({3, 10, 18});
    Rng rng(5);
    for (double& v : input.values) v = rng.normal();
    const Tensor<double> logits = model.forward(input);
    for (int b = 0; b < 3; ++b) {
        for (int c = 0; c < 4; ++c) {
            REQUIRE(logits.values[static_cast<std::size_t>(b) * 4 + c] ==
                    Approx(0.5 + c).margin(1e-12));
        }
    }
}

TEST_CASE("scalar GRU follows the hand-computed recurrence") {
    GruLayer<double> layer(1, 1);
    // Gate order: reset, update, candidate.
    layer.w_ih().values = {0.7, -0.4, 1.1};
    layer.w_hh().values = {0.3, 0.6, -0.8};
    layer.b_ih().values = {0.1, 0.2, -0.1};
    layer.b_hh().values = {-0.2, 0.05, 0.3};

    const double x0 = 0.9, x1 = -0.6;
    Tensor<double> x({1, 2, 1});
    x.values = {x0, x1};
    const Tensor<double>& h_seq = layer.forward(x);

    auto sigmoid = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
    double h = 0.0;
    std::vector<double> expected;
    for (double xt : {x0, x1}) {
        const double r = sigmoid(0.7 * xt + 0.1 + 0.3 * h - 0.2);
        const double z = sigmoid(-0.4 * xt + 0.2 + 0.6 * h + 0.05);
        const double n = std::tanh(1.1 * xt - 0.1 + r * (-0.8 * h + 0.3));
        h = (1.0 - z) * n + z * h;
        expected.push_back(h);
    }
    REQUIRE(h_seq.values[0] == Approx(expected[0]).margin(1e-12));
    REQUIRE(h_seq.values[1] == Approx(expected[1]).margin(1e-12));
}

TEST_CASE("cross entropy of uniform logits is ln(classes)") {
    Tensor<double> logits({1, 71});
    const LossResult<double> loss = cross_entropy(logits, {17});
    REQUIRE(loss.loss == Approx(std::log(71.0)).margin(1e-9));
}

TEST_CASE("cross entropy saturates when the true logit dominates") {
    Tensor<double> logits({1, 5});
    logits.values = {0, 0, 30, 0, 0};
    const LossResult<double> loss = cross_entropy(logits, {2});
    REQUIRE(loss.loss < 1e-12);
}

TEST_CASE("cross entropy matches a brute-force oracle on random 3-class batches") {
    Rng rng(40);
    for (int trial = 0; trial < 100; ++trial) {
        Tensor<double> logits({4, 3});
        for (double& v : logits.values) v = rng.uniform(-5, 5);
        std::vector<int> labels(4);
        for (int& l : labels) l = static_cast<int>(rng.uniform_int(0, 2));
        const LossResult<double> loss = cross_entropy(logits, labels);
        // Independent path: direct softmax + log without max subtraction.
        double expected = 0.0;
        for (int b = 0; b < 4; ++b) {
            double denom = 0.0;
            for (int c = 0; c < 3; ++c) denom += std::exp(logits.values[b * 3 + c]);
            expected += -std::log(std::exp(logits.values[b * 3 + labels[b]]) / denom);
        }
        expected /= 4.0;
        REQUIRE(loss.loss == Approx(expected).margin(1e-9));
    }
}

TEST_CASE("cross entropy rejects out-of-range labels") {
    Tensor<double> logits({1, 3});
    REQUIRE_THROWS_AS(cross_entropy(logits, {3}), LabelError);
    REQUIRE_THROWS_AS(cross_entropy(logits, {-1}), LabelError);
}

TEST_CASE("softmax rows sum to one") {
    Rng rng(41);
    std::vector<double> probs(13);
    for (int trial = 0; trial < 100; ++trial) {
        Tensor<double> logits({1, 13});
        for (double& v : logits.values) v = rng.uniform(-40, 40);
        softmax_row(logits.data(), 13, probs.data());
        double sum = 0.0;
        for (double p : probs) sum += p;
        REQUIRE(sum == Approx(1.0).margin(1e-6));
    }
}

TEST_CASE("affine backward matches the hand-derived outer product") {
    // y = W x, 2x2, single sample; dL/dW = dy . x^T
    Linear<double> layer(2, 2);
    layer.weight().values = {1.0, 2.0, 3.0, 4.0};
    layer.bias().values = {0.0, 0.0};
    Tensor<double> x({1, 2});
    x.values = {5.0, 7.0};
    (void)layer.forward(x);
    Tensor<double> dy({1, 2});
    dy.values = {0.5, -1.5};
    const Tensor<double> dx = layer.backward(dy);
    // dW[o][i] = dy[o] * x[i]
    REQUIRE(layer.weight().grad[0] == Approx(0.5 * 5.0));
    REQUIRE(layer.weight().grad[1] == Approx(0.5 * 7.0));
    REQUIRE(layer.weight().grad[2] == Approx(-1.5 * 5.0));
    REQUIRE(layer.weight().grad[3] == Approx(-1.5 * 7.0));
    // dx[i] = sum_o dy[o] W[o][i]
    REQUIRE(dx.values[0] == Approx(0.5 * 1.0 - 1.5 * 3.0));
    REQUIRE(dx.values[1] == Approx(0.5 * 2.0 - 1.5 * 4.0));
}

TEST_CASE("finite differences confirm CNN and GRU gradients") {
    for (const ModelConfig& cfg : gradcheck_configs()) {
        const GradCheckResult result = gradcheck_model(cfg, 4, /*probes_per_tensor=*/40);
        INFO("architecture " << to_string(cfg.architecture) << " worst " << result.worst_param);
        REQUIRE(result.max_rel_error < 1e-4);
    }
}

TEST_CASE("dropout in eval mode matches the no-dropout forward exactly") {
    ModelConfig with_dropout = tiny_cnn();
    with_dropout.cnn_dropout = 0.5;
    ModelConfig without = tiny_cnn();
    CnnModel<double> a(with_dropout);
    CnnModel<double> b(without);
    Rng init_a(77), init_b(77);
    a.init_params(init_a);
    b.init_params(init_b);
    Tensor<double> input({3, 12, 18});
    Rng rng(42);
    for (double& v : input.values) v = rng.normal();
    const Tensor<double> la = a.forward(input, /*training=*/false, nullptr);
    const Tensor<double> lb = b.forward(input, /*training=*/false, nullptr);
    for (std::size_t i = 0; i < la.size(); ++i) REQUIRE(la.values[i] == lb.values[i]);
}

TEST_CASE("eval-mode forward is a pure function of params and input") {
    ModelConfig cfg = tiny_gru();
    GruModel<double> model(cfg);
    Rng init(9);
    model.init_params(init);
    Tensor<double> input({2, 12, 18});
    Rng rng(43);
    for (double& v : input.values) v = rng.normal();
    const Tensor<double> a = model.forward(input);
    const Tensor<double> b = model.forward(input);
    REQUIRE(a.values == b.values);
}

TEST_CASE("backward before forward is a state error") {
    ModelConfig cfg = tiny_cnn();
    CnnModel<double> model(cfg);
    Tensor<double> dlogits({1, cfg.class_count});
    REQUIRE_THROWS_AS(model.backward(dlogits), StateError);
}

TEST_CASE("permuting head rows permutes logits identically") {
    ModelConfig cfg = tiny_cnn(4);
    CnnModel<double> model(cfg);
    Rng init(11);
    model.init_params(init);
    Tensor<double> input({2, 12, 18});
    Rng rng(44);
    for (double& v : input.values) v = rng.normal();
    const Tensor<double> base = model.forward(input);

    // Swap head rows 1 and 3 (weights and biases).
    auto params = model.params();
    Tensor<double>* weight = nullptr;
    Tensor<double>* bias = nullptr;
    for (auto& p : params) {
        if (p.name == "head.weight") weight = p.tensor;
        if (p.name == "head.bias") bias = p.tensor;
    }
    const int in = weight->dim(1);
    for (int i = 0; i < in; ++i) {
        std::swap(weight->values[1 * in + i], weight->values[3 * in + i]);
    }
    std::swap(bias->values[1], bias->values[3]);
    const Tensor<double> permuted = model.forward(input);
    for (int b = 0; b < 2; ++b) {
        REQUIRE(permuted.values[b * 4 + 1] == base.values[b * 4 + 3]);
        REQUIRE(permuted.values[b * 4 + 3] == base.values[b * 4 + 1]);
        REQUIRE(permuted.values[b * 4 + 0] == base.values[b * 4 + 0]);
        REQUIRE(permuted.values[b * 4 + 2] == base.values[b * 4 + 2]);
    }
}

TEST_CASE("adam first step size is approximately the learning rate") {
    Tensor<double> param({1});
    param.values = {1.0};
    param.ensure_grad();
    param.grad = {0.3};
    std::vector<ParamRef<double>> params = {{"p", &param}};
    Adam<double> adam;
    adam.step(params, 0.01);
    // First step: m_hat = g, v_hat = g^2 -> update = lr * g / (|g| + eps)
    REQUIRE(param.values[0] == Approx(1.0 - 0.01).epsilon(1e-6));
}

TEST_CASE("adam leaves parameters unchanged under zero gradients") {
    Tensor<double> param({3});
    param.values = {1.0, -2.0, 3.0};
    param.ensure_grad();
    std::vector<ParamRef<double>> params = {{"p", &param}};
    Adam<double> adam;
    for (int i = 0; i < 10; ++i) adam.step(params, 0.5);
    REQUIRE(param.values[0] == 1.0);
    REQUIRE(param.values[1] == -2.0);
    REQUIRE(param.values[2] == 3.0);
}

TEST_CASE("adam matches an independently hand-stepped oracle on a quadratic") {
    // Minimize f(p) = 0.5 p^2, gradient p, two steps.
    Tensor<double> param({1});
    param.values = {2.0};
    param.ensure_grad();
    std::vector<ParamRef<double>> params = {{"p", &param}};
    Adam<double> adam;

    // Oracle state, stepped by hand.
    double p = 2.0, m = 0.0, v = 0.0;
    const double lr = 0.1, b1 = 0.9, b2 = 0.999, eps = 1e-8;
    for (int t = 1; t <= 2; ++t) {
        param.grad[0] = param.values[0];
        const double g = p;
        m = b1 * m + (1 - b1) * g;
        v = b2 * v + (1 - b2) * g * g;
        const double m_hat = m / (1 - std::pow(b1, t));
        const double v_hat = v / (1 - std::pow(b2, t));
        p -= lr * m_hat / (std::sqrt(v_hat) + eps);
        adam.step(params, lr);
        REQUIRE(param.values[0] == Approx(p).margin(1e-12));
    }
}

TEST_CASE("checkpoint round-trip preserves config, stats, and parameters") {
    ModelConfig cfg = tiny_cnn(7);
    cfg.encoding = EncodingKind::BRV;
    auto model = build_model<double>(cfg);
    Rng init(55);
    model->init_params(init);

    Checkpoint ckpt;
    ckpt.config = cfg;
    ckpt.norm.enabled = true;
    for (std::size_t k = 0; k < kFeatureCount; ++k) {
        ckpt.norm.mean[k] = 0.1 * static_cast<double>(k);
        ckpt.norm.stddev[k] = 1.0 + 0.01 * static_cast<double>(k);
    }
    ckpt.meta.epoch = 31;
    ckpt.meta.val_min_accuracy = 0.875;
    ckpt.meta.seed = 99;
    ckpt.params = export_params(*model);

    const auto path = std::filesystem::temp_directory_path() / "xrid_ckpt_test.ckpt";
    save_checkpoint(ckpt, path);
    const Checkpoint back = load_checkpoint(path);

    REQUIRE(back.config.architecture == cfg.architecture);
    REQUIRE(back.config.encoding == cfg.encoding);
    REQUIRE(back.config.class_count == cfg.class_count);
    REQUIRE(back.config.cnn_channels == cfg.cnn_channels);
    REQUIRE(back.meta.epoch == 31);
    REQUIRE(back.meta.seed == 99);
    REQUIRE(back.norm.mean[5] == ckpt.norm.mean[5]);
    REQUIRE(back.params.size() == ckpt.params.size());
    for (std::size_t i = 0; i < back.params.size(); ++i) {
        REQUIRE(back.params[i].name == ckpt.params[i].name);
        REQUIRE(back.params[i].shape == ckpt.params[i].shape);
        REQUIRE(back.params[i].values == ckpt.params[i].values);
    }
    std::filesystem::remove(path);
}

TEST_CASE("checkpoint save-load-forward is bit-identical in double precision") {
    ModelConfig cfg = tiny_gru(6);
    auto model = build_model<double>(cfg);
    Rng init(66);
    model->init_params(init);

    Checkpoint ckpt;
    ckpt.config = cfg;
    ckpt.params = export_params(*model);

    // Parameters on disk are float32; the in-memory reference model must be
    // the restored one for bit-identical claims.
    auto reference = restore_model<double>(ckpt);
    Tensor<double> input({2, cfg.window_length, 18});
    Rng rng(67);
    for (double& v : input.values) v = rng.normal();
    const Tensor<double> before = reference->forward(input);

    const auto path = std::filesystem::temp_directory_path() / "xrid_ckpt_bits.ckpt";
    save_checkpoint(ckpt, path);
    auto restored = restore_model<double>(load_checkpoint(path));
    const Tensor<double> after = restored->forward(input);
    REQUIRE(before.values == after.values);
    std::filesystem::remove(path);
}

TEST_CASE("truncated checkpoints and bad versions are rejected") {
    ModelConfig cfg = tiny_cnn(3);
    auto model = build_model<double>(cfg);
    Rng init(77);
    model->init_params(init);
    Checkpoint ckpt;
    ckpt.config = cfg;
    ckpt.params = export_params(*model);
    const auto path = std::filesystem::temp_directory_path() / "xrid_ckpt_trunc.ckpt";
    save_checkpoint(ckpt, path);

    // Truncate the parameter blob.
    const auto size = std::filesystem::file_size(path);
    std::filesystem::resize_file(path, size - 10);
    REQUIRE_THROWS_AS(load_checkpoint(path), CheckpointError);

    // Unsupported version.
    {
        std::ofstream out(path, std::ios::binary);
        out << "xrid-checkpoint 99\nparams=0\ndata 0\n";
    }
    REQUIRE_THROWS_AS(load_checkpoint(path), CheckpointError);

    // Not a checkpoint at all.
    {
        std::ofstream out(path, std::ios::binary);
        out << "something else\n";
    }
    REQUIRE_THROWS_AS(load_checkpoint(path), CheckpointError);
    std::filesystem::remove(path);
}

TEST_CASE("early stopping returns the snapshot of the best epoch") {
    // Steady improvement through epoch 31, flat after; patience 6 exhausts
    // at epoch 37 and the snapshot comes from epoch 31.
    EarlyStopMonitor monitor(30, 6, 1e-3);
    for (int epoch = 1; epoch <= 40; ++epoch) {
        const double score = epoch <= 31 ? 0.01 * epoch : 0.2;
        monitor.observe(epoch, score);
        if (monitor.should_stop(epoch)) {
            REQUIRE(epoch == 37);
            break;
        }
        REQUIRE(epoch < 37);
    }
    REQUIRE(monitor.best_epoch() == 31);
    REQUIRE(monitor.best_score() == Approx(0.31));
}

TEST_CASE("early stopping never fires before the minimum epoch count") {
    EarlyStopMonitor monitor(30, 5, 1e-3);
    for (int epoch = 1; epoch <= 29; ++epoch) {
        monitor.observe(epoch, 0.1); // flat from the start
        REQUIRE_FALSE(monitor.should_stop(epoch));
    }
    monitor.observe(30, 0.1);
    REQUIRE(monitor.should_stop(30));
}

TEST_CASE("stagnation below the improvement threshold stops training") {
    EarlyStopMonitor monitor(1, 3, 1e-3);
    monitor.observe(1, 0.5);
    monitor.observe(2, 0.5002); // snapshot improves, stagnation continues
    monitor.observe(3, 0.5004);
    REQUIRE_FALSE(monitor.should_stop(3));
    monitor.observe(4, 0.5006);
    REQUIRE(monitor.should_stop(4));
    REQUIRE(monitor.best_epoch() == 4); // snapshot still tracks the exact best
}
