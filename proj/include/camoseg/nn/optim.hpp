#pragma once

#include <map>
#include <string>

#include "camoseg/nn/layers.hpp"

namespace camoseg::nn {

// AdamW with decoupled weight decay. Update order follows the ParamStore's
// lexicographic iteration, so a run is bit-reproducible.
class AdamW {
public:
    struct Options {
        double lr = 2.5e-4;
        double beta1 = 0.9;
        double beta2 = 0.999;
        double eps = 1e-8;
        double weight_decay = 0.0;
        double max_grad_norm = 0.0;  // 0 disables clipping
    };

    explicit AdamW(Options opt) : opt_(opt) {}

    void step(ParamStore& params);
    void zero_grad(ParamStore& params) { params.zero_grads(); }

    int64_t step_count() const { return t_; }

    // State round-trips through checkpoints under an "opt." prefix.
    std::map<std::string, Tensor> state_tensors() const;
    void load_state(const std::map<std::string, Tensor>& state);

    Options& options() { return opt_; }

private:
    Options opt_;
    int64_t t_ = 0;
    std::map<std::string, std::pair<Tensor, Tensor>> moments_;  // name -> (m, v)
};

}  // namespace camoseg::nn
