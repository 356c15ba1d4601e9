#include "rhythmlab/tensor.hpp"

namespace rhythmlab {

namespace {
thread_local bool g_numerics_check = true;
}

bool numerics_check_enabled() { return g_numerics_check; }
void set_numerics_check(bool on) { g_numerics_check = on; }

namespace detail {
std::string shape_str(const std::vector<int>& s) {
    std::string out = "[";
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(s[i]);
    }
    return out + "]";
}
} // namespace detail

namespace {

double eval_value(const GradCheckFn& f, const std::vector<GradCheckParam>& params) {
    Tape<double> tape;
    std::vector<Tensor<double>> ts;
    ts.reserve(params.size());
    for (const auto& p : params) ts.emplace_back(p.shape, p.value);
    Tensor<double> out = f(tape, ts);
    if (out.size() != 1) throw ContractError("grad_check: f must be scalar-valued");
    return out.item();
}

} // namespace

double grad_check_against(const GradCheckFn& f,
                          const std::vector<std::vector<double>>& analytic,
                          std::vector<GradCheckParam> params, double eps) {
    if (analytic.size() != params.size()) {
        throw ContractError("grad_check: analytic gradient count mismatch");
    }
    const double base1 = eval_value(f, params);
    const double base2 = eval_value(f, params);
    if (base1 != base2) {
        throw ContractError("grad_check: f is not deterministic (two identical "
                            "evaluations disagree)");
    }
    double max_err = 0.0;
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        auto& vals = params[pi].value;
        if (analytic[pi].size() != vals.size()) {
            throw ContractError("grad_check: analytic gradient shape mismatch");
        }
        for (std::size_t i = 0; i < vals.size(); ++i) {
            const double saved = vals[i];
            vals[i] = saved + eps;
            const double up = eval_value(f, params);
            vals[i] = saved - eps;
            const double dn = eval_value(f, params);
            vals[i] = saved;
            const double numeric = (up - dn) / (2.0 * eps);
            const double a = analytic[pi][i];
            const double denom = std::max({std::fabs(a), std::fabs(numeric), 1e-8});
            max_err = std::max(max_err, std::fabs(a - numeric) / denom);
        }
    }
    return max_err;
}

double grad_check(const GradCheckFn& f, std::vector<GradCheckParam> params, double eps) {
    Tape<double> tape;
    std::vector<Tensor<double>> leaves;
    leaves.reserve(params.size());
    for (const auto& p : params) leaves.push_back(tape.leaf(p.shape, p.value));
    Tensor<double> loss = f(tape, leaves);
    if (loss.size() != 1) throw ContractError("grad_check: f must be scalar-valued");
    tape.backward(loss);
    std::vector<std::vector<double>> analytic;
    analytic.reserve(params.size());
    for (const auto& l : leaves) analytic.push_back(tape.grad(l));
    return grad_check_against(f, analytic, std::move(params), eps);
}

} // namespace rhythmlab
