// Window classifiers: a temporal CNN (conv/ReLU/dropout stack, global
// average pooling, affine head) and a stacked GRU (inter-layer dropout,
// affine head on the last step's top-layer hidden state).
#pragma once

#include <memory>
#include <string>
#include <vector>

#include "xrid/encoding.hpp"
#include "xrid/error.hpp"
#include "xrid/layers.hpp"
#include "xrid/rng.hpp"
#include "xrid/tensor.hpp"

namespace xrid {

enum class Architecture { GRU, CNN };

inline const char* to_string(Architecture a) {
    return a == Architecture::GRU ? "gru" : "cnn";
}

inline Architecture parse_architecture(const std::string& s) {
    if (s == "gru" || s == "GRU") return Architecture::GRU;
    if (s == "cnn" || s == "CNN") return Architecture::CNN;
    throw ParameterError("unknown architecture '" + s + "' (expected gru|cnn)");
}

struct ModelConfig {
    Architecture architecture = Architecture::CNN;
    EncodingKind encoding = EncodingKind::BRA;
    int class_count = 2;

    // GRU
    int gru_hidden = 400;
    int gru_layers = 4;
    double gru_dropout = 0.10;

    // CNN
    int cnn_kernel = 3;
    std::vector<int> cnn_channels = {32, 64};
    double cnn_dropout = 0.2;

    double learning_rate = 0.002;

    // Input geometry
    int window_length = 300;
    int feature_count = 18;

    void validate() const {
        if (class_count < 1) throw ParameterError("class count must be >= 1");
        if (window_length < 2) throw ParameterError("window length must be >= 2");
        if (feature_count < 1) throw ParameterError("feature count must be >= 1");
        if (learning_rate <= 0.0) throw ParameterError("learning rate must be positive");
        if (encoding == EncodingKind::SR) {
            throw UnsupportedEncodingError("SR is not a model input encoding");
        }
        if (architecture == Architecture::GRU) {
            if (gru_hidden < 1) throw ParameterError("gru hidden size must be >= 1");
            if (gru_layers < 1) throw ParameterError("gru layer count must be >= 1");
            if (gru_dropout < 0.0 || gru_dropout >= 1.0) {
                throw ParameterError("gru dropout must be in [0,1)");
            }
        } else {
            if (cnn_kernel < 1) throw ParameterError("cnn kernel must be >= 1");
            if (cnn_channels.empty()) throw ParameterError("cnn needs at least one layer");
            for (int c : cnn_channels) {
                if (c < 1) throw ParameterError("cnn channel sizes must be >= 1");
            }
            if (cnn_dropout < 0.0 || cnn_dropout >= 1.0) {
                throw ParameterError("cnn dropout must be in [0,1)");
            }
        }
    }
};

// Tuned configurations from the 71-user benchmark search.
inline ModelConfig preset_config(Architecture arch, EncodingKind encoding) {
    ModelConfig cfg;
    cfg.architecture = arch;
    cfg.encoding = encoding;
    cfg.class_count = 71;
    if (arch == Architecture::GRU) {
        switch (encoding) {
            case EncodingKind::BR:
                cfg.learning_rate = 0.0005;
                cfg.gru_layers = 3;
                cfg.gru_hidden = 300;
                cfg.gru_dropout = 0.32;
                break;
            case EncodingKind::BRV:
                cfg.learning_rate = 0.0007;
                cfg.gru_layers = 4;
                cfg.gru_hidden = 250;
                cfg.gru_dropout = 0.32;
                break;
            default:
                cfg.learning_rate = 0.0005;
                cfg.gru_layers = 4;
                cfg.gru_hidden = 400;
                cfg.gru_dropout = 0.10;
                break;
        }
    } else {
        cfg.learning_rate = 0.002;
        cfg.cnn_kernel = 3;
        switch (encoding) {
            case EncodingKind::BR:
                cfg.cnn_channels = {400, 580, 841, 1219};
                cfg.cnn_dropout = 0.46;
                break;
            case EncodingKind::BRV:
                cfg.cnn_channels = {400, 480, 576};
                cfg.cnn_dropout = 0.42;
                break;
            default:
                cfg.cnn_channels = {600, 900, 1350, 2025};
                cfg.cnn_dropout = 0.44;
                break;
        }
    }
    return cfg;
}

template <typename S>
class Model {
public:
    virtual ~Model() = default;

    // input: [B, window_length, feature_count] -> logits [B, class_count]
    virtual Tensor<S> forward(const Tensor<S>& input, bool training = false,
                              Rng* dropout_rng = nullptr) = 0;
    // Consumes the activations of the preceding forward pass.
    virtual void backward(const Tensor<S>& dlogits) = 0;
    virtual std::vector<ParamRef<S>> params() = 0;
    virtual const ModelConfig& config() const = 0;

    void init_params(Rng& rng) { init_impl(rng); }

    void zero_grads() {
        for (auto& p : params()) p.tensor->zero_grad();
    }

protected:
    virtual void init_impl(Rng& rng) = 0;

    void check_input(const Tensor<S>& input, const ModelConfig& cfg) const {
        if (input.shape.size() != 3 || input.dim(1) != cfg.window_length ||
            input.dim(2) != cfg.feature_count) {
            throw ShapeError("model input: expected [batch," +
                             std::to_string(cfg.window_length) + "," +
                             std::to_string(cfg.feature_count) + "], got " +
                             shape_string(input.shape));
        }
    }
};

template <typename S>
class CnnModel : public Model<S> {
public:
    explicit CnnModel(const ModelConfig& cfg) : cfg_(cfg) {
        cfg_.validate();
        int in_channels = cfg_.feature_count;
        for (int out_channels : cfg_.cnn_channels) {
            convs_.emplace_back(in_channels, out_channels, cfg_.cnn_kernel);
            relus_.emplace_back();
            dropouts_.emplace_back(cfg_.cnn_dropout);
            in_channels = out_channels;
        }
        head_ = Linear<S>(in_channels, cfg_.class_count);
    }

    Tensor<S> forward(const Tensor<S>& input, bool training = false,
                      Rng* dropout_rng = nullptr) override {
        this->check_input(input, cfg_);
        Tensor<S> x = transpose_to_channels(input);
        for (std::size_t l = 0; l < convs_.size(); ++l) {
            x = convs_[l].forward(x);
            x = relus_[l].forward(x);
            x = dropouts_[l].forward(x, training, dropout_rng);
        }
        x = pool_.forward(x);
        Tensor<S> logits = head_.forward(x);
        forward_done_ = true;
        return logits;
    }

    void backward(const Tensor<S>& dlogits) override {
        if (!forward_done_) throw StateError("backward called before forward");
        forward_done_ = false;
        Tensor<S> g = head_.backward(dlogits);
        g = pool_.backward(g);
        for (std::size_t l = convs_.size(); l-- > 0;) {
            g = dropouts_[l].backward(g);
            g = relus_[l].backward(g);
            g = convs_[l].backward(g, /*need_input_grad=*/l > 0);
        }
    }

    std::vector<ParamRef<S>> params() override {
        std::vector<ParamRef<S>> refs;
        for (std::size_t l = 0; l < convs_.size(); ++l) {
            refs.push_back({"conv" + std::to_string(l) + ".weight", &convs_[l].weight()});
            refs.push_back({"conv" + std::to_string(l) + ".bias", &convs_[l].bias()});
        }
        refs.push_back({"head.weight", &head_.weight()});
        refs.push_back({"head.bias", &head_.bias()});
        return refs;
    }

    const ModelConfig& config() const override { return cfg_; }

protected:
    void init_impl(Rng& rng) override {
        for (auto& conv : convs_) conv.init(rng);
        head_.init(rng);
    }

private:
    Tensor<S> transpose_to_channels(const Tensor<S>& input) const {
        const int batch = input.dim(0);
        const int time = input.dim(1);
        const int features = input.dim(2);
        Tensor<S> out({batch, features, time});
        for (int b = 0; b < batch; ++b) {
            const S* in_b = input.data() + static_cast<std::size_t>(b) * time * features;
            S* out_b = out.data() + static_cast<std::size_t>(b) * time * features;
            for (int t = 0; t < time; ++t) {
                for (int f = 0; f < features; ++f) {
                    out_b[static_cast<std::size_t>(f) * time + t] =
                        in_b[static_cast<std::size_t>(t) * features + f];
                }
            }
        }
        return out;
    }

    ModelConfig cfg_;
    std::vector<Conv1d<S>> convs_;
    std::vector<ReLU<S>> relus_;
    std::vector<Dropout<S>> dropouts_;
    GlobalAvgPool<S> pool_;
    Linear<S> head_;
    bool forward_done_ = false;
};

template <typename S>
class GruModel : public Model<S> {
public:
    explicit GruModel(const ModelConfig& cfg) : cfg_(cfg) {
        cfg_.validate();
        int in = cfg_.feature_count;
        for (int l = 0; l < cfg_.gru_layers; ++l) {
            layers_.emplace_back(in, cfg_.gru_hidden);
            in = cfg_.gru_hidden;
            if (l + 1 < cfg_.gru_layers) dropouts_.emplace_back(cfg_.gru_dropout);
        }
        head_ = Linear<S>(cfg_.gru_hidden, cfg_.class_count);
    }

    Tensor<S> forward(const Tensor<S>& input, bool training = false,
                      Rng* dropout_rng = nullptr) override {
        this->check_input(input, cfg_);
        Tensor<S> x = input;
        for (std::size_t l = 0; l < layers_.size(); ++l) {
            x = layers_[l].forward(x);
            if (l + 1 < layers_.size()) x = dropouts_[l].forward(x, training, dropout_rng);
        }
        // Classifier reads the final time step of the top layer.
        const int batch = x.dim(0);
        const int time = x.dim(1);
        const int hidden = x.dim(2);
        last_time_ = time;
        Tensor<S> last({batch, hidden});
        for (int b = 0; b < batch; ++b) {
            const S* row = x.data() +
                           (static_cast<std::size_t>(b) * time + static_cast<std::size_t>(time - 1)) *
                               hidden;
            S* out = last.data() + static_cast<std::size_t>(b) * hidden;
            for (int j = 0; j < hidden; ++j) out[j] = row[j];
        }
        Tensor<S> logits = head_.forward(last);
        forward_done_ = true;
        return logits;
    }

    void backward(const Tensor<S>& dlogits) override {
        if (!forward_done_) throw StateError("backward called before forward");
        forward_done_ = false;
        Tensor<S> dlast = head_.backward(dlogits);
        const int batch = dlast.dim(0);
        const int hidden = dlast.dim(1);
        Tensor<S> g({batch, last_time_, hidden});
        for (int b = 0; b < batch; ++b) {
            const S* src = dlast.data() + static_cast<std::size_t>(b) * hidden;
            S* dst = g.data() + (static_cast<std::size_t>(b) * last_time_ +
                                 static_cast<std::size_t>(last_time_ - 1)) *
                                    hidden;
            for (int j = 0; j < hidden; ++j) dst[j] = src[j];
        }
        for (std::size_t l = layers_.size(); l-- > 0;) {
            if (l + 1 < layers_.size()) g = dropouts_[l].backward(g);
            g = layers_[l].backward(g);
        }
    }

    std::vector<ParamRef<S>> params() override {
        std::vector<ParamRef<S>> refs;
        for (std::size_t l = 0; l < layers_.size(); ++l) {
            const std::string prefix = "gru" + std::to_string(l);
            refs.push_back({prefix + ".w_ih", &layers_[l].w_ih()});
            refs.push_back({prefix + ".w_hh", &layers_[l].w_hh()});
            refs.push_back({prefix + ".b_ih", &layers_[l].b_ih()});
            refs.push_back({prefix + ".b_hh", &layers_[l].b_hh()});
        }
        refs.push_back({"head.weight", &head_.weight()});
        refs.push_back({"head.bias", &head_.bias()});
        return refs;
    }

    const ModelConfig& config() const override { return cfg_; }

protected:
    void init_impl(Rng& rng) override {
        for (auto& layer : layers_) layer.init(rng);
        head_.init(rng);
    }

private:
    ModelConfig cfg_;
    std::vector<GruLayer<S>> layers_;
    std::vector<Dropout<S>> dropouts_;
    Linear<S> head_;
    int last_time_ = 0;
    bool forward_done_ = false;
};

template <typename S>
std::unique_ptr<Model<S>> build_model(const ModelConfig& cfg) {
    if (cfg.architecture == Architecture::CNN) return std::make_unique<CnnModel<S>>(cfg);
    return std::make_unique<GruModel<S>>(cfg);
}

} // namespace xrid
