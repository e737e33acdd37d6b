#include "gpr.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>

#include <json.hpp>

#include "error.hpp"
#include "features.hpp"

namespace fqa {

namespace {

Eigen::MatrixXd pairwise_distances(const Eigen::MatrixXd& x) {
    const Eigen::Index n = x.rows();
    Eigen::MatrixXd d(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        d(i, i) = 0.0;
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double r = (x.row(i) - x.row(j)).norm();
            d(i, j) = r;
            d(j, i) = r;
        }
    }
    return d;
}

double median_offdiag(const Eigen::MatrixXd& d) {
    std::vector<double> v;
    v.reserve(static_cast<size_t>(d.rows()) * (d.rows() - 1) / 2);
    for (Eigen::Index i = 0; i < d.rows(); ++i) {
        for (Eigen::Index j = i + 1; j < d.cols(); ++j) v.push_back(d(i, j));
    }
    if (v.empty()) return 1.0;
    std::sort(v.begin(), v.end());
    const size_t n = v.size();
    const double med = (n % 2 == 1) ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
    return med > 0.0 ? med : 1.0;
}

Eigen::MatrixXd gram(const Eigen::MatrixXd& dist, const KernelParams& p) {
    Eigen::MatrixXd k = (-dist / p.length_scale).array().exp().matrix() * p.signal_variance;
    k.diagonal().array() += p.noise_variance;
    return k;
}

// Cholesky with escalating diagonal jitter, 1e-10..1e-4 of the mean diagonal.
Eigen::LLT<Eigen::MatrixXd> chol_with_jitter(const Eigen::MatrixXd& k) {
    Eigen::LLT<Eigen::MatrixXd> llt(k);
    if (llt.info() == Eigen::Success) return llt;
    const double scale = k.trace() / static_cast<double>(k.rows());
    double jitter = 1e-10;
    while (jitter <= 1e-4) {
        Eigen::MatrixXd kj = k;
        kj.diagonal().array() += jitter * scale;
        llt.compute(kj);
        if (llt.info() == Eigen::Success) return llt;
        jitter *= 10.0;
    }
    throw NumericError("Gram matrix not positive definite after jitter escalation to " +
                       std::to_string(1e-4 * scale));
}

struct Evidence {
    double value;
    Eigen::Vector3d grad;  // w.r.t. log(sf2), log(ell), log(sn2)
};

double evidence_value(const Eigen::MatrixXd& dist, const Eigen::VectorXd& y,
                      const KernelParams& p) {
    const Eigen::Index n = y.size();
    const Eigen::MatrixXd k = gram(dist, p);
    const auto llt = chol_with_jitter(k);
    const Eigen::VectorXd alpha = llt.solve(y);
    const double logdet = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    return -0.5 * y.dot(alpha) - 0.5 * logdet -
           0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
}

Evidence evidence_grad(const Eigen::MatrixXd& dist, const Eigen::VectorXd& y,
                       const KernelParams& p) {
    const Eigen::Index n = y.size();
    const Eigen::MatrixXd noiseless =
        (-dist / p.length_scale).array().exp().matrix() * p.signal_variance;
    Eigen::MatrixXd k = noiseless;
    k.diagonal().array() += p.noise_variance;
    const auto llt = chol_with_jitter(k);
    const Eigen::VectorXd alpha = llt.solve(y);
    const double logdet = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();

    Evidence ev;
    ev.value = -0.5 * y.dot(alpha) - 0.5 * logdet -
               0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);

    // d lml / d theta = 1/2 tr((alpha alpha' - K^-1) dK/dtheta)
    const Eigen::MatrixXd kinv = llt.solve(Eigen::MatrixXd::Identity(n, n));
    const Eigen::MatrixXd a = alpha * alpha.transpose() - kinv;
    ev.grad[0] = 0.5 * a.cwiseProduct(noiseless).sum();
    ev.grad[1] = 0.5 * a.cwiseProduct(noiseless.cwiseProduct(dist)).sum() / p.length_scale;
    ev.grad[2] = 0.5 * p.noise_variance * a.trace();
    return ev;
}

KernelParams unpack(const Eigen::VectorXd& theta, const std::optional<double>& pinned_noise) {
    KernelParams p;
    p.signal_variance = std::exp(theta[0]);
    p.length_scale = std::exp(theta[1]);
    p.noise_variance = pinned_noise ? *pinned_noise : std::exp(theta[2]);
    return p;
}

constexpr double kLogClamp = 23.0;  // keeps exp() comfortably finite

void clamp_theta(Eigen::VectorXd& theta) {
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
        theta[i] = std::clamp(theta[i], -kLogClamp, kLogClamp);
    }
}

// BFGS on the negative evidence over the free log-parameters.
struct OptResult {
    Eigen::VectorXd theta;
    double value;  // evidence (maximized)
};

OptResult maximize_evidence(const Eigen::MatrixXd& dist, const Eigen::VectorXd& y,
                            Eigen::VectorXd theta, const std::optional<double>& pinned_noise,
                            int max_iterations) {
    const Eigen::Index dim = theta.size();
    clamp_theta(theta);

    auto eval = [&](const Eigen::VectorXd& th) {
        const KernelParams p = unpack(th, pinned_noise);
        Evidence ev = evidence_grad(dist, y, p);
        Eigen::VectorXd g(dim);
        g[0] = -ev.grad[0];
        g[1] = -ev.grad[1];
        if (dim == 3) g[2] = -ev.grad[2];
        return std::pair<double, Eigen::VectorXd>(-ev.value, g);
    };

    auto [f, g] = eval(theta);
    Eigen::MatrixXd h = Eigen::MatrixXd::Identity(dim, dim);
    for (int iter = 0; iter < max_iterations; ++iter) {
        if (g.lpNorm<Eigen::Infinity>() < 1e-7 * std::max(1.0, std::abs(f))) break;
        Eigen::VectorXd dir = -h * g;
        double slope = g.dot(dir);
        if (slope >= 0.0) {  // reset a spoiled approximation
            h.setIdentity();
            dir = -g;
            slope = g.dot(dir);
        }
        double step = 1.0;
        double f_new = f;
        Eigen::VectorXd theta_new = theta;
        bool accepted = false;
        for (int ls = 0; ls < 40; ++ls) {
            theta_new = theta + step * dir;
            clamp_theta(theta_new);
            double trial;
            try {
                const KernelParams p = unpack(theta_new, pinned_noise);
                trial = -evidence_value(dist, y, p);
            } catch (const NumericError&) {
                step *= 0.5;
                continue;
            }
            if (std::isfinite(trial) && trial <= f + 1e-4 * step * slope) {
                f_new = trial;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;

        const Eigen::VectorXd g_new = eval(theta_new).second;
        const Eigen::VectorXd s = theta_new - theta;
        const Eigen::VectorXd yv = g_new - g;
        const double sy = s.dot(yv);
        if (sy > 1e-12 * s.norm() * yv.norm()) {
            const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(dim, dim);
            const double rho = 1.0 / sy;
            h = (eye - rho * s * yv.transpose()) * h * (eye - rho * yv * s.transpose()) +
                rho * s * s.transpose();
        }
        const double drop = f - f_new;
        theta = theta_new;
        f = f_new;
        g = g_new;
        if (drop < 1e-11 * std::max(1.0, std::abs(f))) break;
    }
    return {theta, -f};
}

}  // namespace

double kernel(const Eigen::VectorXd& x, const Eigen::VectorXd& y, const KernelParams& p) {
    return p.signal_variance * std::exp(-(x - y).norm() / p.length_scale);
}

double log_marginal_likelihood(const Eigen::MatrixXd& features, const Eigen::VectorXd& targets,
                               const KernelParams& p) {
    return evidence_value(pairwise_distances(features), targets, p);
}

std::pair<double, Eigen::Vector3d> log_marginal_likelihood_grad(const Eigen::MatrixXd& features,
                                                                const Eigen::VectorXd& targets,
                                                                const KernelParams& p) {
    const Evidence ev = evidence_grad(pairwise_distances(features), targets, p);
    return {ev.value, ev.grad};
}

GprModel GprModel::fit(const Eigen::MatrixXd& features, const Eigen::VectorXd& targets,
                       const FitOptions& opts) {
    const Eigen::Index n = features.rows();
    const Eigen::Index d = features.cols();
    if (n < 2) throw DataError("GPR fit needs at least 2 training points");
    if (targets.size() != n) throw DataError("GPR fit: feature/target count mismatch");
    if (!features.allFinite() || !targets.allFinite()) {
        throw DataError("GPR fit: non-finite training data");
    }

    GprModel m;
    m.layout_ = (d == kFeatureCount) ? kFeatureLayout
                                     : ("custom-d" + std::to_string(d));

    // Standardize features with train-set statistics; constant features
    // pass through with a unit divisor.
    m.feat_mean_ = features.colwise().mean();
    m.feat_std_.resize(d);
    m.constant_.resize(static_cast<size_t>(d));
    for (Eigen::Index j = 0; j < d; ++j) {
        const double var =
            (features.col(j).array() - m.feat_mean_[j]).square().sum() / static_cast<double>(n);
        const double sd = std::sqrt(var);
        const bool constant = sd < 1e-12;
        m.constant_[static_cast<size_t>(j)] = constant;
        m.feat_std_[j] = constant ? 1.0 : sd;
    }
    m.train_.resize(n, d);
    for (Eigen::Index j = 0; j < d; ++j) {
        m.train_.col(j) = (features.col(j).array() - m.feat_mean_[j]) / m.feat_std_[j];
    }

    m.offset_ = targets.mean();
    const Eigen::VectorXd centered = targets.array() - m.offset_;

    if (opts.fixed_params) {
        m.params_ = *opts.fixed_params;
    } else {
        const Eigen::MatrixXd dist = pairwise_distances(m.train_);
        const double med = median_offdiag(dist);
        const double var_y = std::max(centered.squaredNorm() / static_cast<double>(n), 1e-12);
        const bool pin = opts.pinned_noise_variance.has_value();
        const Eigen::Index dim = pin ? 2 : 3;

        std::mt19937_64 rng(opts.seed);
        std::uniform_real_distribution<double> unit(0.0, 1.0);

        bool have_best = false;
        OptResult best{Eigen::VectorXd::Zero(dim), 0.0};
        const int restarts = std::max(opts.restarts, 1);
        for (int r = 0; r < restarts; ++r) {
            Eigen::VectorXd theta(dim);
            if (r == 0) {
                theta[0] = std::log(var_y);
                theta[1] = std::log(med);
                if (!pin) theta[2] = std::log(0.1 * var_y);
            } else {
                // Log-uniform draws around the heuristic center.
                theta[0] = std::log(var_y) + (unit(rng) * 2.0 - 1.0) * std::numbers::ln10;
                theta[1] = std::log(med) + (unit(rng) * 2.0 - 1.0) * std::numbers::ln10;
                if (!pin) theta[2] = std::log(var_y) + (unit(rng) * -4.0) * std::numbers::ln10;
            }
            try {
                OptResult res = maximize_evidence(dist, centered, theta,
                                                  opts.pinned_noise_variance,
                                                  opts.max_iterations);
                if (!have_best || res.value > best.value) {
                    best = res;
                    have_best = true;
                }
            } catch (const NumericError&) {
                continue;  // restart landed in a numerically hopeless region
            }
        }
        if (!have_best) throw NumericError("GPR fit: every restart failed to factorize");
        m.params_ = unpack(best.theta, opts.pinned_noise_variance);
    }

    m.factorize();
    m.alpha_ = m.chol_.solve(centered);
    return m;
}

void GprModel::factorize() {
    const Eigen::MatrixXd k = gram(pairwise_distances(train_), params_);
    chol_ = chol_with_jitter(k);
}

Eigen::VectorXd GprModel::standardize(const Eigen::VectorXd& x) const {
    return (x - feat_mean_).cwiseQuotient(feat_std_);
}

Prediction GprModel::predict(const Eigen::VectorXd& x) const {
    if (x.size() != feat_mean_.size()) {
        throw UsageError("predict: feature dimension mismatch (" + std::to_string(x.size()) +
                         " vs " + std::to_string(feat_mean_.size()) + ")");
    }
    if (!x.allFinite()) throw DataError("predict: non-finite feature vector");
    const Eigen::VectorXd xs = standardize(x);
    const Eigen::Index n = train_.rows();
    Eigen::VectorXd kstar(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        kstar[i] = params_.signal_variance *
                   std::exp(-(xs.transpose() - train_.row(i)).norm() / params_.length_scale);
    }
    Prediction pred;
    pred.mean = kstar.dot(alpha_) + offset_;
    pred.variance = params_.signal_variance - kstar.dot(chol_.solve(kstar));
    if (pred.variance < 0.0) pred.variance = 0.0;
    return pred;
}

void GprModel::save(const std::string& path) const {
    nlohmann::json j;
    j["format"] = "freqiqa-model";
    j["version"] = 1;
    j["feature_layout"] = layout_;
    j["kernel"] = "exponential";
    j["params"] = {{"signal_variance", params_.signal_variance},
                   {"length_scale", params_.length_scale},
                   {"noise_variance", params_.noise_variance}};
    j["target_offset"] = offset_;
    j["standardizer"] = {
        {"mean", std::vector<double>(feat_mean_.data(), feat_mean_.data() + feat_mean_.size())},
        {"std", std::vector<double>(feat_std_.data(), feat_std_.data() + feat_std_.size())},
        {"constant", constant_}};
    std::vector<std::vector<double>> rows(static_cast<size_t>(train_.rows()));
    for (Eigen::Index i = 0; i < train_.rows(); ++i) {
        rows[static_cast<size_t>(i)].assign(train_.row(i).begin(), train_.row(i).end());
    }
    j["train_features"] = rows;
    j["alpha"] = std::vector<double>(alpha_.data(), alpha_.data() + alpha_.size());

    std::ofstream out(path);
    if (!out) throw DataError("cannot write model file: " + path);
    out << j.dump(2) << "\n";
    if (!out) throw DataError("write failed: " + path);
}

GprModel GprModel::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open model file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("model file " + path + " is not valid JSON: " + e.what());
    }
    try {
        if (j.at("format") != "freqiqa-model") {
            throw DataError("model file " + path + ": unknown format tag");
        }
        if (j.at("version") != 1) {
            throw DataError("model file " + path + ": unsupported version " +
                            j.at("version").dump() + " (expected 1)");
        }
        if (j.at("kernel") != "exponential") {
            throw DataError("model file " + path + ": unsupported kernel " +
                            j.at("kernel").dump());
        }
        GprModel m;
        m.layout_ = j.at("feature_layout").get<std::string>();
        const auto& p = j.at("params");
        m.params_.signal_variance = p.at("signal_variance").get<double>();
        m.params_.length_scale = p.at("length_scale").get<double>();
        m.params_.noise_variance = p.at("noise_variance").get<double>();
        m.offset_ = j.at("target_offset").get<double>();
        const auto mean = j.at("standardizer").at("mean").get<std::vector<double>>();
        const auto sd = j.at("standardizer").at("std").get<std::vector<double>>();
        m.constant_ = j.at("standardizer").at("constant").get<std::vector<bool>>();
        const auto alpha = j.at("alpha").get<std::vector<double>>();
        const auto rows = j.at("train_features").get<std::vector<std::vector<double>>>();
        if (mean.size() != sd.size() || rows.empty() || rows.size() != alpha.size()) {
            throw DataError("model file " + path + ": inconsistent array sizes");
        }
        const Eigen::Index d = static_cast<Eigen::Index>(mean.size());
        const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
        m.feat_mean_ = Eigen::Map<const Eigen::VectorXd>(mean.data(), d);
        m.feat_std_ = Eigen::Map<const Eigen::VectorXd>(sd.data(), d);
        m.train_.resize(n, d);
        for (Eigen::Index i = 0; i < n; ++i) {
            if (static_cast<Eigen::Index>(rows[static_cast<size_t>(i)].size()) != d) {
                throw DataError("model file " + path + ": ragged train_features");
            }
            m.train_.row(i) =
                Eigen::Map<const Eigen::VectorXd>(rows[static_cast<size_t>(i)].data(), d);
        }
        m.alpha_ = Eigen::Map<const Eigen::VectorXd>(alpha.data(), n);
        m.factorize();
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("model file " + path + ": missing or malformed field: " + e.what());
    }
}

}  // namespace fqa
