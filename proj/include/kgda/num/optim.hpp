#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "kgda/errors.hpp"
#include "kgda/num/params.hpp"

namespace kgda::num {

struct AdamConfig {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Adam with bias correction. State is index-aligned with the ParamStore it
// was constructed from; one shared step counter.
class Adam {
  public:
    explicit Adam(const ParamStore& params, AdamConfig cfg = {}) : cfg_(cfg) {
        m_.reserve(params.size());
        v_.reserve(params.size());
        for (int i = 0; i < params.size(); ++i) {
            m_.emplace_back(params.value(i).rows(), params.value(i).cols());
            v_.emplace_back(params.value(i).rows(), params.value(i).cols());
        }
    }

    void step(ParamStore& params, const std::vector<Matrix>& grads) {
        if (static_cast<int>(grads.size()) != params.size() ||
            params.size() != static_cast<int>(m_.size()))
            throw ShapeError("adam: gradient list does not match parameter store");
        ++t_;
        const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
        const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
        for (int i = 0; i < params.size(); ++i) {
            Matrix& p = params.value(i);
            const Matrix& g = grads[i];
            if (!p.same_shape(g))
                throw ShapeError("adam: grad " + g.shape_str() + " vs param " + p.shape_str() +
                                 " (" + params.name(i) + ")");
            double* mp = m_[i].data();
            double* vp = v_[i].data();
            double* pp = p.data();
            const double* gp = g.data();
            for (std::size_t j = 0; j < p.size(); ++j) {
                mp[j] = cfg_.beta1 * mp[j] + (1.0 - cfg_.beta1) * gp[j];
                vp[j] = cfg_.beta2 * vp[j] + (1.0 - cfg_.beta2) * gp[j] * gp[j];
                const double mhat = mp[j] / bc1;
                const double vhat = vp[j] / bc2;
                pp[j] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
            }
        }
    }

    std::int64_t steps() const { return t_; }

  private:
    AdamConfig cfg_;
    std::vector<Matrix> m_, v_;
    std::int64_t t_ = 0;
};

class Sgd {
  public:
    explicit Sgd(double lr) : lr_(lr) {}

    void step(ParamStore& params, const std::vector<Matrix>& grads) {
        if (static_cast<int>(grads.size()) != params.size())
            throw ShapeError("sgd: gradient list does not match parameter store");
        for (int i = 0; i < params.size(); ++i) {
            Matrix& p = params.value(i);
            const Matrix& g = grads[i];
            if (!p.same_shape(g))
                throw ShapeError("sgd: grad " + g.shape_str() + " vs param " + p.shape_str());
            for (std::size_t j = 0; j < p.size(); ++j) p.data()[j] -= lr_ * g.data()[j];
        }
    }

  private:
    double lr_;
};

// Either optimizer behind one step() call.
class Optimizer {
  public:
    enum class Kind { adam, sgd };

    Optimizer(Kind kind, const ParamStore& params, double lr) : kind_(kind), sgd_(lr) {
        if (kind_ == Kind::adam) {
            AdamConfig cfg;
            cfg.lr = lr;
            adam_.emplace(params, cfg);
        }
    }

    void step(ParamStore& params, const std::vector<Matrix>& grads) {
        if (kind_ == Kind::adam)
            adam_->step(params, grads);
        else
            sgd_.step(params, grads);
    }

  private:
    Kind kind_;
    std::optional<Adam> adam_;
    Sgd sgd_;
};

}  // namespace kgda::num
