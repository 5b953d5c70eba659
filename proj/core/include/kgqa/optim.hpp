#pragma once

#include <vector>

#include "kgqa/tensor.hpp"

namespace kgqa {

// Adam over a fixed list of tensors. weight_decay > 0 gives decoupled
// (AdamW) decay.
class Adam {
public:
    struct Options {
        double beta1 = 0.9;
        double beta2 = 0.999;
        double eps = 1e-8;
        double weight_decay = 0.0;
    };

    Adam(const std::vector<Matrix*>& params, Options opts);
    explicit Adam(const std::vector<Matrix*>& params) : Adam(params, Options{}) {}

    void step(const std::vector<Matrix*>& params, const std::vector<Matrix*>& grads, double lr);
    long steps() const { return t_; }

private:
    Options opts_;
    std::vector<Matrix> m_;
    std::vector<Matrix> v_;
    long t_ = 0;
};

}  // namespace kgqa
