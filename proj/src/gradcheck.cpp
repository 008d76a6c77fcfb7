#include "hydrodeep/gradcheck.hpp"

#include <cmath>
#include <map>
#include <vector>

#include "hydrodeep/errors.hpp"

namespace hydrodeep {

GradCheckReport grad_check(ParamStore& store, const std::function<Var()>& make_loss, double eps) {
    if (!(eps > 0.0)) throw ParameterError("grad_check: eps must be > 0");

    store.zero_grad();
    Var loss = make_loss();
    if (loss.value().size() != 1) throw DimensionError("grad_check expects a scalar loss");
    loss.backward();

    std::map<std::string, std::vector<double>> analytic;
    for (auto& [name, e] : store) analytic[name] = e.var.grad().data;

    GradCheckReport report;
    for (auto& [name, e] : store) {
        Tensor& value = e.var.mutable_value();
        for (std::size_t i = 0; i < value.size(); ++i) {
            const double saved = value[i];
            value[i] = saved + eps;
            const double f_plus = make_loss().value()[0];
            value[i] = saved - eps;
            const double f_minus = make_loss().value()[0];
            value[i] = saved;

            const double numeric = (f_plus - f_minus) / (2.0 * eps);
            const double a = analytic[name][i];
            const double denom = std::max({std::fabs(a), std::fabs(numeric), 1e-8});
            const double rel = std::fabs(a - numeric) / denom;
            if (rel > report.max_rel_error) {
                report.max_rel_error = rel;
                report.worst_parameter = name;
                report.worst_index = i;
                report.analytic = a;
                report.numeric = numeric;
            }
        }
    }
    return report;
}

}  // namespace hydrodeep
