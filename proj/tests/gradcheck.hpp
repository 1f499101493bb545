// Central-difference gradient checking shared by the unit and acceptance suites.
#pragma once

#include "topogen/rng.hpp"
#include "topogen/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

namespace topogen::testing {

struct GradCheck {
    double max_rel = 0.0;
    double max_abs = 0.0;
    std::size_t checked = 0;
};

/// Relative error with a floor so near-zero gradients compare absolutely.
inline double rel_error(double analytic, double numeric, double floor = 1e-6) {
    return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

/// Compares analytic gradients of `loss` w.r.t. `inputs` against central
/// differences. When `max_per_input` is nonzero, a random subset of entries
/// of each input is probed.
inline GradCheck check_gradients(const std::function<ad::Tensor()>& loss, std::vector<ad::Tensor> inputs,
                                 double h = 1e-5, std::size_t max_per_input = 0, std::uint64_t seed = 7) {
    for (auto& t : inputs) t.zero_grad();
    ad::Tensor l = loss();
    l.backward();
    std::vector<std::vector<double>> analytic;
    for (auto& t : inputs) analytic.emplace_back(t.grad().begin(), t.grad().end());
    GradCheck out;
    Rng rng(seed);
    for (std::size_t k = 0; k < inputs.size(); ++k) {
        auto w = inputs[k].mutable_data();
        std::vector<std::size_t> idx(w.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        if (max_per_input && idx.size() > max_per_input) {
            std::shuffle(idx.begin(), idx.end(), rng.engine());
            idx.resize(max_per_input);
        }
        for (std::size_t i : idx) {
            const double orig = w[i];
            double fp, fm;
            {
                ad::NoGradGuard ng;
                w[i] = orig + h;
                fp = loss().item();
                w[i] = orig - h;
                fm = loss().item();
            }
            w[i] = orig;
            const double numeric = (fp - fm) / (2.0 * h);
            out.max_rel = std::max(out.max_rel, rel_error(analytic[k][i], numeric));
            out.max_abs = std::max(out.max_abs, std::abs(analytic[k][i] - numeric));
            ++out.checked;
        }
    }
    return out;
}

inline ad::Tensor random_tensor(ad::Shape shape, Rng& rng, double scale = 1.0, bool requires_grad = true) {
    std::vector<double> v(ad::numel(shape));
    for (auto& x : v) x = scale * rng.normal();
    return ad::Tensor::from(std::move(shape), std::move(v), requires_grad);
}

} // namespace topogen::testing
