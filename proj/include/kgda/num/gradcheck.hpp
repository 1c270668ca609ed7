#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "kgda/num/matrix.hpp"
#include "kgda/num/params.hpp"

namespace kgda::num {

// Central finite differences against analytic gradients.
//
// The function under test gets a ParamStore and must build a fresh tape each
// call, returning the scalar loss; when `grads` is non-null it must also run
// backward and fill the per-parameter gradients. Stochastic pieces (dropout)
// must be re-seeded identically inside the callback so every evaluation sees
// the same noise.
struct GradCheckResult {
    bool ok = true;
    double worst_rel = 0.0;
    std::string worst_at;
};

using LossFn = std::function<double(ParamStore& params, std::vector<Matrix>* grads)>;

inline GradCheckResult finite_diff_check(ParamStore& params, const LossFn& fn,
                                         double step = 1e-5, double tol = 1e-4) {
    GradCheckResult res;
    std::vector<Matrix> analytic;
    fn(params, &analytic);
    for (int pi = 0; pi < params.size(); ++pi) {
        Matrix& p = params.value(pi);
        for (std::size_t j = 0; j < p.size(); ++j) {
            const double orig = p.data()[j];
            p.data()[j] = orig + step;
            const double up = fn(params, nullptr);
            p.data()[j] = orig - step;
            const double down = fn(params, nullptr);
            p.data()[j] = orig;
            const double fd = (up - down) / (2.0 * step);
            const double an = analytic[pi](static_cast<int>(j / p.cols()),
                                           static_cast<int>(j % p.cols()));
            const double rel =
                std::abs(an - fd) / std::max({1.0, std::abs(an), std::abs(fd)});
            if (rel > res.worst_rel) {
                res.worst_rel = rel;
                res.worst_at = params.name(pi) + "[" + std::to_string(j) + "]";
            }
        }
    }
    res.ok = res.worst_rel <= tol;
    return res;
}

}  // namespace kgda::num
