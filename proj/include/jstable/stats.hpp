#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <unordered_map>
#include <vector>

namespace jstable {

struct FitResult {
    Eigen::VectorXd coefficients;
    double intercept = 0.0;
    double residual_variance = 0.0;  // RSS / n
    int n = 0;
};

enum class AggregatorKind { Fisher, Stouffer, Tippett, Mean };

AggregatorKind parse_aggregator(const std::string& name);
const char* to_string(AggregatorKind k);

// distribution helpers
double normal_cdf(double x);
double normal_sf(double x);
double normal_quantile(double p);  // lower-tail inverse, p in (0,1)
double gamma_q(double a, double x);  // regularized upper incomplete gamma
double chi2_sf(double x, double df);

FitResult ols_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double ridge = 0.0);
// ridge 0 first, then 1e-8 * trace(XcᵀXc)/k on singular systems
FitResult ols_fit_robust(const Eigen::MatrixXd& X, const Eigen::VectorXd& y);

Eigen::MatrixXd select_columns(const Eigen::MatrixXd& data, const std::vector<int>& cols);

double gaussian_loglik(double residual_variance, int n);
double bic_local(const Eigen::MatrixXd& data, int v, const std::vector<int>& parents);

// cached BIC local scores from the sample covariance; parents as bitmask (d <= 64)
class BicScorer {
public:
    explicit BicScorer(const Eigen::MatrixXd& data);
    double local(int v, std::uint64_t parent_mask);
    double local(int v, const std::vector<int>& parents);
    int n() const { return n_; }
    int d() const { return static_cast<int>(cov_.rows()); }

private:
    Eigen::MatrixXd cov_;
    int n_;
    std::vector<std::unordered_map<std::uint64_t, double>> cache_;
};

double partial_correlation(const Eigen::MatrixXd& corr, int i, int j, const std::vector<int>& S);
double fisher_z_pvalue(double r, int n, int s_size);
double fisher_z_test(const Eigen::MatrixXd& data, int i, int j, const std::vector<int>& S);
Eigen::MatrixXd correlation_matrix(const Eigen::MatrixXd& data);

// clamped is set when a zero p-value had to be raised to the smallest positive double
double aggregate_pvalues(const std::vector<double>& ps, AggregatorKind kind, bool* clamped = nullptr);

struct GaussianSummary {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
};
GaussianSummary summarize(const Eigen::MatrixXd& sample, double ridge = 1e-6);
double gaussian_sym_kl(const GaussianSummary& a, const GaussianSummary& b);

double energy_distance(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);
double median_pairwise_distance(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);
// bandwidth <= 0 selects the median heuristic
double mmd(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double bandwidth = 0.0);

}  // namespace jstable
