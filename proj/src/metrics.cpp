#include "metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>
#include <json.hpp>

#include "error.hpp"

namespace fqa {

namespace {

std::vector<double> mid_ranks(const std::vector<double>& v) {
    const size_t n = v.size();
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(n);
    size_t i = 0;
    while (i < n) {
        size_t j = i;
        while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
        const double avg = 0.5 * static_cast<double>(i + j) + 1.0;  // ranks are 1-based
        for (size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
        i = j + 1;
    }
    return ranks;
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    const size_t n = x.size();
    double mx = 0.0, my = 0.0;
    for (size_t i = 0; i < n; ++i) { mx += x[i]; my += y[i]; }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double dx = x[i] - mx, dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx <= 0.0 || syy <= 0.0) {
        throw DataError("undefined correlation: constant input vector");
    }
    return sxy / std::sqrt(sxx * syy);
}

void check_pair(const std::vector<double>& x, const std::vector<double>& y, size_t min_n) {
    if (x.size() != y.size()) throw UsageError("correlation inputs differ in length");
    if (x.size() < min_n) {
        throw DataError("correlation needs at least " + std::to_string(min_n) + " points, got " +
                        std::to_string(x.size()));
    }
}

// 1/(1+exp(z)), overflow-safe.
double inv_logit(double z) {
    if (z > 0.0) {
        const double e = std::exp(-z);
        return e / (1.0 + e);
    }
    return 1.0 / (1.0 + std::exp(z));
}

}  // namespace

double logistic_eval(const LogisticParams& p, double x) {
    const auto& b = p.beta;
    const double s = inv_logit(b[1] * (x - b[2]));
    return b[0] * (0.5 - s) + b[3] * x + b[4];
}

double srocc(const std::vector<double>& x, const std::vector<double>& y) {
    check_pair(x, y, 3);
    return pearson(mid_ranks(x), mid_ranks(y));
}

double krocc(const std::vector<double>& x, const std::vector<double>& y) {
    check_pair(x, y, 2);
    const size_t n = x.size();
    long long concordant = 0, discordant = 0, ties_x = 0, ties_y = 0;
    for (size_t i = 0; i < n; ++i) {
        for (size_t j = i + 1; j < n; ++j) {
            const double dx = x[i] - x[j], dy = y[i] - y[j];
            if (dx == 0.0 && dy == 0.0) { ++ties_x; ++ties_y; }
            else if (dx == 0.0) ++ties_x;
            else if (dy == 0.0) ++ties_y;
            else if ((dx > 0.0) == (dy > 0.0)) ++concordant;
            else ++discordant;
        }
    }
    const double n0 = 0.5 * static_cast<double>(n) * static_cast<double>(n - 1);
    const double denom =
        std::sqrt((n0 - static_cast<double>(ties_x)) * (n0 - static_cast<double>(ties_y)));
    if (denom <= 0.0) throw DataError("undefined correlation: all pairs tied");
    return static_cast<double>(concordant - discordant) / denom;
}

LogisticParams fit_logistic(const std::vector<double>& predicted,
                            const std::vector<double>& subjective) {
    check_pair(predicted, subjective, 6);
    const size_t n = predicted.size();
    const auto& x = predicted;
    const auto& y = subjective;

    double mean_x = 0.0, mean_y = 0.0;
    for (size_t i = 0; i < n; ++i) { mean_x += x[i]; mean_y += y[i]; }
    mean_x /= static_cast<double>(n);
    mean_y /= static_cast<double>(n);
    double var_x = 0.0;
    for (size_t i = 0; i < n; ++i) var_x += (x[i] - mean_x) * (x[i] - mean_x);
    var_x /= static_cast<double>(n);
    const auto [ymin, ymax] = std::minmax_element(y.begin(), y.end());

    Eigen::Matrix<double, 5, 1> beta;
    beta << *ymax - *ymin,
            var_x > 0.0 ? 1.0 / std::sqrt(var_x) : 1.0,
            mean_x,
            0.0,
            mean_y;

    auto cost_of = [&](const Eigen::Matrix<double, 5, 1>& b) {
        LogisticParams p;
        for (int k = 0; k < 5; ++k) p.beta[k] = b[k];
        double c = 0.0;
        for (size_t i = 0; i < n; ++i) {
            const double r = logistic_eval(p, x[i]) - y[i];
            c += r * r;
        }
        return c;
    };

    double cost = cost_of(beta);
    double lambda = 1e-3;
    bool converged = false;
    constexpr int kMaxIter = 200;
    for (int iter = 0; iter < kMaxIter; ++iter) {
        // Residuals and Jacobian at the current point.
        Eigen::MatrixXd jac(n, 5);
        Eigen::VectorXd res(n);
        for (size_t i = 0; i < n; ++i) {
            const double z = beta[1] * (x[i] - beta[2]);
            const double s = inv_logit(z);
            const double m = beta[0] * (0.5 - s) + beta[3] * x[i] + beta[4];
            const double dm_dz = beta[0] * s * (1.0 - s);
            res[static_cast<Eigen::Index>(i)] = m - y[i];
            jac(static_cast<Eigen::Index>(i), 0) = 0.5 - s;
            jac(static_cast<Eigen::Index>(i), 1) = dm_dz * (x[i] - beta[2]);
            jac(static_cast<Eigen::Index>(i), 2) = dm_dz * -beta[1];
            jac(static_cast<Eigen::Index>(i), 3) = x[i];
            jac(static_cast<Eigen::Index>(i), 4) = 1.0;
        }
        const Eigen::Matrix<double, 5, 5> jtj = jac.transpose() * jac;
        const Eigen::Matrix<double, 5, 1> jtr = jac.transpose() * res;
        if (jtr.lpNorm<Eigen::Infinity>() < 1e-12 * std::max(1.0, cost)) {
            converged = true;
            break;
        }

        bool stepped = false;
        while (lambda < 1e12) {
            Eigen::Matrix<double, 5, 5> a = jtj;
            for (int k = 0; k < 5; ++k) a(k, k) += lambda * std::max(jtj(k, k), 1e-12);
            const Eigen::Matrix<double, 5, 1> delta = a.ldlt().solve(-jtr);
            const Eigen::Matrix<double, 5, 1> trial = beta + delta;
            const double trial_cost = cost_of(trial);
            if (std::isfinite(trial_cost) && trial_cost <= cost) {
                const double drop = cost - trial_cost;
                beta = trial;
                cost = trial_cost;
                lambda = std::max(lambda / 3.0, 1e-12);
                stepped = true;
                if (drop <= 1e-14 * std::max(1.0, cost) ||
                    delta.norm() <= 1e-12 * (beta.norm() + 1e-12)) {
                    converged = true;
                }
                break;
            }
            lambda *= 10.0;
        }
        if (!stepped) break;  // damping exhausted, keep best-so-far
        if (converged) break;
    }

    LogisticParams out;
    for (int k = 0; k < 5; ++k) out.beta[k] = beta[k];
    out.converged = converged;
    return out;
}

std::pair<double, double> plcc_rmse(const std::vector<double>& predicted,
                                    const std::vector<double>& subjective,
                                    const LogisticParams& params) {
    check_pair(predicted, subjective, 3);
    const size_t n = predicted.size();
    std::vector<double> mapped(n);
    for (size_t i = 0; i < n; ++i) mapped[i] = logistic_eval(params, predicted[i]);
    double sq = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double d = mapped[i] - subjective[i];
        sq += d * d;
    }
    const double rmse = std::sqrt(sq / static_cast<double>(n));
    return {pearson(mapped, subjective), rmse};
}

std::string EvalReport::to_kv() const {
    char buf[512];
    std::snprintf(buf, sizeof(buf),
                  "srocc=%.10g\nkrocc=%.10g\nplcc=%.10g\nrmse=%.10g\nn=%zu\n"
                  "logistic_converged=%d\ndegenerate=%d\n",
                  srocc, krocc, plcc, rmse, n, logistic.converged ? 1 : 0,
                  degenerate ? 1 : 0);
    return buf;
}

std::string EvalReport::to_json() const {
    nlohmann::json j;
    j["format"] = "freqiqa-evalreport";
    j["version"] = 1;
    j["n"] = n;
    j["srocc"] = srocc;
    j["krocc"] = krocc;
    j["plcc"] = plcc;
    j["rmse"] = rmse;
    j["logistic"] = {{"beta", logistic.beta}, {"converged", logistic.converged}};
    j["degenerate"] = degenerate;
    return j.dump();
}

EvalReport evaluate_scores(const std::vector<double>& predicted,
                           const std::vector<double>& subjective) {
    EvalReport r;
    r.n = predicted.size();
    r.srocc = srocc(predicted, subjective);
    r.krocc = krocc(predicted, subjective);
    r.logistic = fit_logistic(predicted, subjective);
    std::tie(r.plcc, r.rmse) = plcc_rmse(predicted, subjective, r.logistic);
    return r;
}

EvalReport evaluate_lenient(const std::vector<double>& predicted,
                            const std::vector<double>& subjective) {
    EvalReport r;
    r.n = predicted.size();
    try {
        r.srocc = srocc(predicted, subjective);
    } catch (const DataError&) {
        r.srocc = 0.0;
        r.degenerate = true;
    }
    try {
        r.krocc = krocc(predicted, subjective);
    } catch (const DataError&) {
        r.krocc = 0.0;
        r.degenerate = true;
    }
    try {
        r.logistic = fit_logistic(predicted, subjective);
        std::tie(r.plcc, r.rmse) = plcc_rmse(predicted, subjective, r.logistic);
    } catch (const DataError&) {
        r.plcc = 0.0;
        r.rmse = 0.0;
        r.degenerate = true;
    }
    return r;
}

}  // namespace fqa
