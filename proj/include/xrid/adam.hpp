// Adam with bias-corrected first and second moments.
#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "xrid/error.hpp"
#include "xrid/tensor.hpp"

namespace xrid {

template <typename S>
class Adam {
public:
    explicit Adam(double beta1 = 0.9, double beta2 = 0.999, double epsilon = 1e-8)
        : beta1_(beta1), beta2_(beta2), epsilon_(epsilon) {}

    void step(std::vector<ParamRef<S>>& params, double learning_rate) {
        if (slots_.size() != params.size()) {
            slots_.clear();
            slots_.resize(params.size());
            for (std::size_t i = 0; i < params.size(); ++i) {
                slots_[i].m.assign(params[i].tensor->size(), S(0));
                slots_[i].v.assign(params[i].tensor->size(), S(0));
            }
        }
        ++t_;
        const double bias1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
        const double bias2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
        for (std::size_t i = 0; i < params.size(); ++i) {
            Tensor<S>& tensor = *params[i].tensor;
            if (tensor.grad.size() != tensor.size()) {
                throw StateError("adam step on parameter without gradient: " + params[i].name);
            }
            Slot& slot = slots_[i];
            for (std::size_t k = 0; k < tensor.size(); ++k) {
                const double g = static_cast<double>(tensor.grad[k]);
                const double m = beta1_ * static_cast<double>(slot.m[k]) + (1.0 - beta1_) * g;
                const double v = beta2_ * static_cast<double>(slot.v[k]) + (1.0 - beta2_) * g * g;
                slot.m[k] = static_cast<S>(m);
                slot.v[k] = static_cast<S>(v);
                const double m_hat = m / bias1;
                const double v_hat = v / bias2;
                tensor.values[k] = static_cast<S>(static_cast<double>(tensor.values[k]) -
                                                  learning_rate * m_hat /
                                                      (std::sqrt(v_hat) + epsilon_));
            }
        }
    }

    std::uint64_t step_count() const { return t_; }

private:
    struct Slot {
        std::vector<S> m;
        std::vector<S> v;
    };
    double beta1_;
    double beta2_;
    double epsilon_;
    std::uint64_t t_ = 0;
    std::vector<Slot> slots_;
};

} // namespace xrid
