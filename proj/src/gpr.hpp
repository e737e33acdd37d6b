#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace fqa {

// Isotropic exponential (Ornstein-Uhlenbeck) kernel:
// k(x,y) = signal_variance * exp(-||x-y|| / length_scale).
struct KernelParams {
    double signal_variance = 1.0;
    double length_scale = 1.0;
    double noise_variance = 0.0;
};

double kernel(const Eigen::VectorXd& x, const Eigen::VectorXd& y, const KernelParams& p);

struct Prediction {
    double mean = 0.0;
    double variance = 0.0;
};

struct FitOptions {
    uint64_t seed = 0;
    int restarts = 5;
    int max_iterations = 100;
    // Pin the noise variance instead of optimizing it.
    std::optional<double> pinned_noise_variance;
    // Skip hyperparameter optimization entirely.
    std::optional<KernelParams> fixed_params;
};

// GP evidence -1/2 d'K^-1 d - 1/2 log|K| - n/2 log(2pi) with
// K = gram(features) + noise_variance*I, evaluated on the inputs as given
// (no standardization). Gradient is w.r.t. the log-hyperparameters
// (log signal_variance, log length_scale, log noise_variance).
double log_marginal_likelihood(const Eigen::MatrixXd& features, const Eigen::VectorXd& targets,
                               const KernelParams& p);
std::pair<double, Eigen::Vector3d> log_marginal_likelihood_grad(const Eigen::MatrixXd& features,
                                                                const Eigen::VectorXd& targets,
                                                                const KernelParams& p);

// Trained regressor: feature standardizer, kernel hyperparameters, retained
// training features and the precomputed solve vector.
class GprModel {
public:
    // Standardizes features, centers targets, maximizes the evidence over
    // log-hyperparameters (quasi-Newton, `restarts` seeded restarts) and
    // stores the solve vector. Deterministic given options.seed.
    static GprModel fit(const Eigen::MatrixXd& features, const Eigen::VectorXd& targets,
                        const FitOptions& opts = {});

    Prediction predict(const Eigen::VectorXd& x) const;

    const KernelParams& params() const { return params_; }
    double target_offset() const { return offset_; }
    const std::string& feature_layout() const { return layout_; }
    Eigen::Index dimension() const { return feat_mean_.size(); }
    Eigen::Index train_size() const { return train_.rows(); }
    const Eigen::VectorXd& alpha() const { return alpha_; }
    const Eigen::MatrixXd& train_features() const { return train_; }

    void save(const std::string& path) const;
    static GprModel load(const std::string& path);

private:
    Eigen::VectorXd standardize(const Eigen::VectorXd& x) const;
    void factorize();  // rebuilds the Cholesky factor of the Gram matrix

    std::string layout_;
    Eigen::VectorXd feat_mean_;
    Eigen::VectorXd feat_std_;        // unit divisor where constant
    std::vector<bool> constant_;      // flagged constant features
    Eigen::MatrixXd train_;           // standardized n x d
    Eigen::VectorXd alpha_;           // [K + noise*I]^-1 (targets - offset)
    KernelParams params_;
    double offset_ = 0.0;
    Eigen::LLT<Eigen::MatrixXd> chol_;  // factor of the regularized Gram matrix
};

}  // namespace fqa
