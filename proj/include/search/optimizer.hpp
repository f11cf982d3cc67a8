#pragma once

#include <cmath>
#include <vector>

#include "diffcore/tensor.hpp"

namespace search {

struct SgdConfig {
    double lr = 0.01;
    double momentum = 0.0;
    double weight_decay = 0.0;
    double clip_norm = 0.0;  // global gradient-norm clip; 0 disables
};

// Plain SGD with optional momentum and decoupled-from-nothing weight decay
// (decay is added to the gradient, the classic form). Owns velocity state;
// touches only the parameters it was built with.
class Sgd {
  public:
    Sgd(std::vector<diffcore::Tensor<float>> params, SgdConfig cfg)
        : params_(std::move(params)), cfg_(cfg) {
        velocity_.resize(params_.size());
    }

    void zero_grad() {
        for (auto& p : params_) p.zero_grad();
    }

    // Schedule hook: scales the configured learning rate.
    void set_lr_scale(double s) { lr_scale_ = s; }

    void step() {
        double clip_scale = 1.0;
        if (cfg_.clip_norm > 0.0) {
            double sq = 0.0;
            for (auto& p : params_)
                if (p.has_grad())
                    for (float g : p.grad()) sq += double(g) * double(g);
            const double norm = std::sqrt(sq);
            if (norm > cfg_.clip_norm) clip_scale = cfg_.clip_norm / norm;
        }
        for (std::size_t i = 0; i < params_.size(); ++i) {
            auto& p = params_[i];
            if (!p.has_grad()) continue;
            auto& vel = velocity_[i];
            if (cfg_.momentum != 0.0 && vel.empty()) vel.assign(p.values().size(), 0.0f);
            auto& v = p.values();
            auto& g = p.grad();
            for (std::size_t j = 0; j < v.size(); ++j) {
                double grad = double(g[j]) * clip_scale + cfg_.weight_decay * double(v[j]);
                if (cfg_.momentum != 0.0) {
                    vel[j] = float(cfg_.momentum * double(vel[j]) + grad);
                    grad = double(vel[j]);
                }
                v[j] = float(double(v[j]) - cfg_.lr * lr_scale_ * grad);
            }
        }
    }

  private:
    std::vector<diffcore::Tensor<float>> params_;
    std::vector<std::vector<float>> velocity_;
    SgdConfig cfg_;
    double lr_scale_ = 1.0;
};

}  // namespace search
