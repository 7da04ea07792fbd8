#pragma once

#include <functional>
#include <string>
#include <vector>

#include "lawin/ops.hpp"

namespace lawin::verify {

struct GradCheckResult {
    bool pass = true;
    double max_rel_err = 0.0;
    index_t checked = 0;
    std::string detail;  // worst offender, empty when clean
};

// Central finite differences against the tape gradient, f64 only.
// `forward` must rebuild the graph from the current parameter values on
// every call. Relative error is checked where |analytic| > 1e-8; a large
// numeric gradient against a ~zero analytic one also fails.
inline GradCheckResult grad_check(const std::function<Tensor<double>()>& forward,
                                  std::vector<Tensor<double>> params,
                                  double step = 1e-5, double tol = 1e-4) {
    GradCheckResult res;
    for (auto& p : params) p.set_requires_grad(true);

    Tape<double> tape;
    std::vector<std::vector<double>> analytic;
    {
        typename Tape<double>::Scope scope(tape);
        Tensor<double> loss = forward();
        tape.backward(loss);
    }
    for (auto& p : params)
        analytic.push_back(p.has_grad() ? p.grad()
                                        : std::vector<double>(p.values().size(), 0.0));

    auto eval = [&]() { return forward().item(); };

    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        auto& vals = params[pi].values();
        for (std::size_t i = 0; i < vals.size(); ++i) {
            const double saved = vals[i];
            vals[i] = saved + step;
            const double fp = eval();
            vals[i] = saved - step;
            const double fm = eval();
            vals[i] = saved;
            const double numeric = (fp - fm) / (2.0 * step);
            const double ana = analytic[pi][i];
            ++res.checked;
            if (std::abs(ana) > 1e-8) {
                const double rel =
                    std::abs(ana - numeric) / std::max(std::abs(ana), std::abs(numeric));
                if (rel > res.max_rel_err) {
                    res.max_rel_err = rel;
                    if (rel > tol)
                        res.detail = str("param ", pi, " elem ", i, ": analytic ", ana,
                                         " vs numeric ", numeric, " rel ", rel);
                }
            } else if (std::abs(numeric) > 1e-4) {
                res.pass = false;
                res.detail = str("param ", pi, " elem ", i, ": analytic ~0 but numeric ",
                                 numeric);
            }
        }
    }
    if (res.max_rel_err > tol) res.pass = false;
    return res;
}

}  // namespace lawin::verify
