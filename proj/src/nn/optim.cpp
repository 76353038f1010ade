#include "camoseg/nn/optim.hpp"

#include <cmath>

namespace camoseg::nn {

void AdamW::step(ParamStore& params) {
    ++t_;
    double clip_scale = 1.0;
    if (opt_.max_grad_norm > 0.0) {
        double sq = 0.0;
        for (const auto& [name, p] : params.all()) {
            if (!p->has_grad()) continue;
            for (int64_t i = 0; i < p->grad.numel(); ++i) sq += p->grad[i] * p->grad[i];
        }
        const double norm = std::sqrt(sq);
        if (norm > opt_.max_grad_norm) clip_scale = opt_.max_grad_norm / norm;
    }
    const double bc1 = 1.0 - std::pow(opt_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(opt_.beta2, static_cast<double>(t_));
    for (const auto& [name, p] : params.all()) {
        if (!p->has_grad()) continue;
        auto it = moments_.find(name);
        if (it == moments_.end())
            it = moments_.emplace(name, std::make_pair(Tensor::zeros(p->value.shape), Tensor::zeros(p->value.shape))).first;
        Tensor& m = it->second.first;
        Tensor& v = it->second.second;
        for (int64_t i = 0; i < p->value.numel(); ++i) {
            const double g = p->grad[i] * clip_scale;
            m[i] = opt_.beta1 * m[i] + (1.0 - opt_.beta1) * g;
            v[i] = opt_.beta2 * v[i] + (1.0 - opt_.beta2) * g * g;
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            p->value[i] -= opt_.lr * (mhat / (std::sqrt(vhat) + opt_.eps) + opt_.weight_decay * p->value[i]);
        }
    }
}

std::map<std::string, Tensor> AdamW::state_tensors() const {
    std::map<std::string, Tensor> out;
    out["opt.step"] = Tensor::scalar(static_cast<double>(t_));
    for (const auto& [name, mv] : moments_) {
        out["opt.m." + name] = mv.first;
        out["opt.v." + name] = mv.second;
    }
    return out;
}

void AdamW::load_state(const std::map<std::string, Tensor>& state) {
    moments_.clear();
    t_ = 0;
    auto it = state.find("opt.step");
    if (it != state.end()) t_ = static_cast<int64_t>(it->second[0]);
    for (const auto& [name, t] : state) {
        if (name.rfind("opt.m.", 0) == 0) {
            const std::string pname = name.substr(6);
            moments_[pname].first = t;
        } else if (name.rfind("opt.v.", 0) == 0) {
            const std::string pname = name.substr(6);
            moments_[pname].second = t;
        }
    }
}

}  // namespace camoseg::nn
