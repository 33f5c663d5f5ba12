#include "lexcd/grad_check.hpp"

#include <cmath>
#include <stdexcept>

namespace lexcd {

GradCheckReport grad_check(const std::function<Tensor<double>()>& f,
                           const std::vector<std::pair<std::string, Tensor<double>>>& params,
                           double step) {
    if (!(step > 0.0)) throw std::invalid_argument("grad_check: step must be > 0");

    for (const auto& [name, p] : params) {
        if (!p.requires_grad()) {
            throw std::invalid_argument("grad_check: parameter " + name +
                                        " does not require grad");
        }
        Tensor<double>(p).zero_grad();
    }

    Tensor<double> loss = f();
    if (loss.numel() != 1) {
        throw std::invalid_argument("grad_check: f must produce a scalar, got " +
                                    loss.shape().str());
    }
    loss.backward();

    std::vector<std::vector<double>> analytic;
    analytic.reserve(params.size());
    for (const auto& [name, p] : params) {
        analytic.push_back(p.has_grad() ? p.grad()
                                        : std::vector<double>(static_cast<size_t>(p.numel()), 0.0));
    }

    GradCheckReport report;
    for (size_t pi = 0; pi < params.size(); ++pi) {
        Tensor<double> p = params[pi].second;
        auto& vals = p.raw_value();
        for (size_t i = 0; i < vals.size(); ++i) {
            const double saved = vals[i];
            vals[i] = saved + step;
            const double f_plus = f().item();
            vals[i] = saved - step;
            const double f_minus = f().item();
            vals[i] = saved;
            const double numeric = (f_plus - f_minus) / (2.0 * step);
            const double a = analytic[pi][i];
            const double err = std::abs(a - numeric) / std::max(1.0, std::abs(numeric));
            ++report.checked;
            if (err > report.max_rel_err) {
                report.max_rel_err = err;
                report.worst_param = params[pi].first;
                report.worst_index = static_cast<long long>(i);
                report.analytic = a;
                report.numeric = numeric;
            }
        }
    }
    return report;
}

GradCheckReport grad_check(const std::function<Tensor<double>()>& f,
                           const std::vector<Tensor<double>>& params, double step) {
    std::vector<std::pair<std::string, Tensor<double>>> named;
    named.reserve(params.size());
    for (size_t i = 0; i < params.size(); ++i) {
        named.emplace_back("p" + std::to_string(i), params[i]);
    }
    return grad_check(f, named, step);
}

}  // namespace lexcd
