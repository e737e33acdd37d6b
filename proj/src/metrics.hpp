#pragma once

#include <array>
#include <string>
#include <vector>

namespace fqa {

// Five-parameter logistic remap fitted before PLCC/RMSE:
// f(x) = b1*(1/2 - 1/(1+exp(b2*(x-b3)))) + b4*x + b5.
struct LogisticParams {
    std::array<double, 5> beta{};
    bool converged = true;
};

double logistic_eval(const LogisticParams& p, double x);

// Pearson correlation of fractional (mid) ranks; ties get average ranks.
double srocc(const std::vector<double>& x, const std::vector<double>& y);

// Kendall tau-b (tie-corrected).
double krocc(const std::vector<double>& x, const std::vector<double>& y);

// Damped nonlinear least squares on the residuals of the logistic remap.
// Non-convergence returns the best parameters found with converged=false.
LogisticParams fit_logistic(const std::vector<double>& predicted,
                            const std::vector<double>& subjective);

// PLCC of (f(x), y) and RMSE of f(x) vs y under the fitted remap.
std::pair<double, double> plcc_rmse(const std::vector<double>& predicted,
                                    const std::vector<double>& subjective,
                                    const LogisticParams& params);

struct EvalReport {
    double srocc = 0.0;
    double krocc = 0.0;
    double plcc = 0.0;
    double rmse = 0.0;
    LogisticParams logistic;
    size_t n = 0;
    bool degenerate = false;  // undefined correlation reported as zeros

    std::string to_kv() const;    // one metric per line
    std::string to_json() const;
};

// Full evaluation of predicted vs subjective scores. Undefined correlations
// (constant inputs) surface as DataError; evaluate_lenient flags them
// instead so long experiment loops never abort.
EvalReport evaluate_scores(const std::vector<double>& predicted,
                           const std::vector<double>& subjective);
EvalReport evaluate_lenient(const std::vector<double>& predicted,
                            const std::vector<double>& subjective);

}  // namespace fqa
