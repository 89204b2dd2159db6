#include "jstable/stats.hpp"
#include "jstable/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace jstable {

AggregatorKind parse_aggregator(const std::string& name) {
    if (name == "fisher") return AggregatorKind::Fisher;
    if (name == "stouffer") return AggregatorKind::Stouffer;
    if (name == "tippett") return AggregatorKind::Tippett;
    if (name == "mean") return AggregatorKind::Mean;
    throw Error(ErrorKind::invalid_config, "unknown aggregator '" + name + "'");
}

const char* to_string(AggregatorKind k) {
    switch (k) {
        case AggregatorKind::Fisher: return "fisher";
        case AggregatorKind::Stouffer: return "stouffer";
        case AggregatorKind::Tippett: return "tippett";
        case AggregatorKind::Mean: return "mean";
    }
    return "?";
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }
double normal_sf(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        if (p == 0.0) return -std::numeric_limits<double>::infinity();
        if (p == 1.0) return std::numeric_limits<double>::infinity();
        throw Error(ErrorKind::invalid_argument, "normal_quantile outside [0,1]");
    }
    // Acklam's rational approximation followed by Halley steps
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                               1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                               6.680131188771972e+01,  -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                               -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
    static const double dd[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                3.754408661907416e+00};
    const double plow = 0.02425;
    double x;
    if (p < plow) {
        double q = std::sqrt(-2 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((dd[0] * q + dd[1]) * q + dd[2]) * q + dd[3]) * q + 1);
    } else if (p <= 1 - plow) {
        double q = p - 0.5, r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
    } else {
        double q = std::sqrt(-2 * std::log1p(-p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((dd[0] * q + dd[1]) * q + dd[2]) * q + dd[3]) * q + 1);
    }
    for (int it = 0; it < 2; ++it) {
        // residual computed in whichever tail keeps precision
        double e = x < 0 ? normal_cdf(x) - p : (1.0 - p) - normal_sf(x);
        double u = e * std::sqrt(2 * std::numbers::pi) * std::exp(x * x / 2);
        x = x - u / (1 + x * u / 2);
    }
    return x;
}

namespace {

double gamma_p_series(double a, double x) {
    double ap = a, sum = 1.0 / a, del = sum;
    for (int n = 0; n < 10000; ++n) {
        ap += 1;
        del *= x / ap;
        sum += del;
        if (std::fabs(del) < std::fabs(sum) * 1e-16) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

double gamma_q_fraction(double a, double x) {
    const double tiny = 1e-300;
    double b = x + 1 - a, c = 1 / tiny, d = 1 / b, h = d;
    for (int i = 1; i < 10000; ++i) {
        double an = -i * (i - a);
        b += 2;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1 / d;
        double del = d * c;
        h *= del;
        if (std::fabs(del - 1) < 1e-16) break;
    }
    return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace

double gamma_q(double a, double x) {
    if (a <= 0) throw Error(ErrorKind::invalid_argument, "gamma_q needs a > 0");
    if (x <= 0) return 1.0;
    if (x < a + 1) return 1.0 - gamma_p_series(a, x);
    return gamma_q_fraction(a, x);
}

double chi2_sf(double x, double df) { return gamma_q(df / 2.0, x / 2.0); }

FitResult ols_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double ridge) {
    const int n = static_cast<int>(y.size());
    const int k = static_cast<int>(X.cols());
    if (n < 1) throw Error(ErrorKind::insufficient_samples, "ols_fit needs n >= 1");
    if (X.rows() != n) throw Error(ErrorKind::dimension_mismatch, "ols_fit rows differ");
    if (ridge < 0) throw Error(ErrorKind::invalid_argument, "ridge must be nonnegative");
    FitResult fit;
    fit.n = n;
    const double ym = y.mean();
    Eigen::VectorXd yc = y.array() - ym;
    if (k == 0) {
        fit.coefficients.resize(0);
        fit.intercept = ym;
        fit.residual_variance = yc.squaredNorm() / n;
        return fit;
    }
    Eigen::RowVectorXd xm = X.colwise().mean();
    Eigen::MatrixXd Xc = X.rowwise() - xm;
    Eigen::MatrixXd A = Xc.transpose() * Xc;
    A.diagonal().array() += ridge;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(A);
    const double scale = std::max(A.diagonal().maxCoeff(), 1e-300);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
        ldlt.vectorD().minCoeff() <= 1e-12 * scale)
        throw Error(ErrorKind::singular_fit, "normal equations are numerically singular");
    fit.coefficients = ldlt.solve(Xc.transpose() * yc);
    fit.intercept = ym - xm.dot(fit.coefficients);
    fit.residual_variance = (yc - Xc * fit.coefficients).squaredNorm() / n;
    return fit;
}

FitResult ols_fit_robust(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
    try {
        return ols_fit(X, y, 0.0);
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::singular_fit) throw;
    }
    Eigen::MatrixXd Xc = X.rowwise() - X.colwise().mean();
    double tr = Xc.colwise().squaredNorm().sum();
    double ridge = 1e-8 * std::max(tr, 1e-12) / std::max<Eigen::Index>(X.cols(), 1);
    return ols_fit(X, y, ridge);
}

Eigen::MatrixXd select_columns(const Eigen::MatrixXd& data, const std::vector<int>& cols) {
    Eigen::MatrixXd out(data.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t c = 0; c < cols.size(); ++c) out.col(c) = data.col(cols[c]);
    return out;
}

double gaussian_loglik(double residual_variance, int n) {
    return -0.5 * n * (std::log(2 * std::numbers::pi * residual_variance) + 1.0);
}

namespace {

double bic_from_variance(double var, double var_y, int n, int k) {
    if (!(var_y > 0)) throw Error(ErrorKind::degenerate_data, "zero-variance column");
    var = std::max(var, 1e-12 * var_y);
    return gaussian_loglik(var, n) - 0.5 * std::log(static_cast<double>(n)) * (k + 2);
}

}  // namespace

double bic_local(const Eigen::MatrixXd& data, int v, const std::vector<int>& parents) {
    if (std::find(parents.begin(), parents.end(), v) != parents.end())
        throw Error(ErrorKind::invalid_argument, "node listed among its own parents");
    const int n = static_cast<int>(data.rows());
    Eigen::VectorXd y = data.col(v);
    double var_y = (y.array() - y.mean()).square().sum() / n;
    if (!(var_y > 0)) throw Error(ErrorKind::degenerate_data, "zero-variance column");
    FitResult fit = ols_fit_robust(select_columns(data, parents), y);
    return bic_from_variance(fit.residual_variance, var_y, n, static_cast<int>(parents.size()));
}

BicScorer::BicScorer(const Eigen::MatrixXd& data) : n_(static_cast<int>(data.rows())) {
    if (data.cols() > 64) throw Error(ErrorKind::invalid_argument, "BicScorer supports d <= 64");
    Eigen::MatrixXd c = data.rowwise() - data.colwise().mean();
    cov_ = (c.transpose() * c) / static_cast<double>(n_);
    cache_.resize(data.cols());
    for (int v = 0; v < cov_.rows(); ++v)
        if (!(cov_(v, v) > 0)) throw Error(ErrorKind::degenerate_data, "zero-variance column");
}

double BicScorer::local(int v, std::uint64_t mask) {
    auto& cache = cache_[v];
    auto it = cache.find(mask);
    if (it != cache.end()) return it->second;
    std::vector<int> pa;
    for (int u = 0; u < d(); ++u)
        if (mask >> u & 1ULL) pa.push_back(u);
    double var = cov_(v, v);
    if (!pa.empty()) {
        const int k = static_cast<int>(pa.size());
        Eigen::MatrixXd A(k, k);
        Eigen::VectorXd b(k);
        for (int a = 0; a < k; ++a) {
            b(a) = cov_(pa[a], v);
            for (int c = 0; c < k; ++c) A(a, c) = cov_(pa[a], pa[c]);
        }
        Eigen::LDLT<Eigen::MatrixXd> ldlt(A);
        if (ldlt.info() != Eigen::Success || ldlt.vectorD().minCoeff() <= 1e-12 * A.diagonal().maxCoeff())
            A.diagonal().array() += 1e-8 * A.trace() / k;
        var = cov_(v, v) - b.dot(Eigen::LDLT<Eigen::MatrixXd>(A).solve(b));
    }
    double s = bic_from_variance(var, cov_(v, v), n_, static_cast<int>(pa.size()));
    cache.emplace(mask, s);
    return s;
}

double BicScorer::local(int v, const std::vector<int>& parents) {
    std::uint64_t mask = 0;
    for (int u : parents) mask |= 1ULL << u;
    return local(v, mask);
}

Eigen::MatrixXd correlation_matrix(const Eigen::MatrixXd& data) {
    Eigen::MatrixXd c = data.rowwise() - data.colwise().mean();
    Eigen::MatrixXd cov = c.transpose() * c;
    Eigen::VectorXd sd = cov.diagonal().array().sqrt();
    for (int i = 0; i < cov.rows(); ++i)
        for (int j = 0; j < cov.cols(); ++j)
            cov(i, j) = (sd(i) > 0 && sd(j) > 0) ? cov(i, j) / (sd(i) * sd(j)) : (i == j ? 1.0 : 0.0);
    return cov;
}

double partial_correlation(const Eigen::MatrixXd& corr, int i, int j, const std::vector<int>& S) {
    if (S.empty()) return corr(i, j);
    // canonical order so the result is exactly symmetric in (i,j) and S order
    std::vector<int> idx{std::min(i, j), std::max(i, j)};
    std::vector<int> sorted_s(S);
    std::sort(sorted_s.begin(), sorted_s.end());
    idx.insert(idx.end(), sorted_s.begin(), sorted_s.end());
    const int k = static_cast<int>(idx.size());
    Eigen::MatrixXd sub(k, k);
    for (int a = 0; a < k; ++a)
        for (int b = 0; b < k; ++b) sub(a, b) = corr(idx[a], idx[b]);
    Eigen::MatrixXd P = sub.completeOrthogonalDecomposition().pseudoInverse();
    double den = std::sqrt(P(0, 0) * P(1, 1));
    if (!(den > 0)) return 0.0;
    return std::clamp(-P(0, 1) / den, -1.0, 1.0);
}

double fisher_z_pvalue(double r, int n, int s_size) {
    const int dof = n - s_size - 3;
    if (dof <= 0) throw Error(ErrorKind::insufficient_samples, "n - |S| - 3 <= 0");
    if (std::fabs(r) >= 1.0) return 0.0;
    double z = std::sqrt(static_cast<double>(dof)) * std::atanh(r);
    return std::clamp(std::erfc(std::fabs(z) / std::numbers::sqrt2), 0.0, 1.0);
}

double fisher_z_test(const Eigen::MatrixXd& data, int i, int j, const std::vector<int>& S) {
    const int d = static_cast<int>(data.cols());
    if (i == j || i < 0 || j < 0 || i >= d || j >= d)
        throw Error(ErrorKind::invalid_argument, "fisher_z_test needs distinct valid i, j");
    for (int s : S)
        if (s == i || s == j) throw Error(ErrorKind::invalid_argument, "conditioning set contains i or j");
    std::vector<int> cols{std::min(i, j), std::max(i, j)};
    std::vector<int> sorted_s(S);
    std::sort(sorted_s.begin(), sorted_s.end());
    cols.insert(cols.end(), sorted_s.begin(), sorted_s.end());
    Eigen::MatrixXd corr = correlation_matrix(select_columns(data, cols));
    std::vector<int> local_s;
    for (std::size_t k = 2; k < cols.size(); ++k) local_s.push_back(static_cast<int>(k));
    double r = partial_correlation(corr, 0, 1, local_s);
    return fisher_z_pvalue(r, static_cast<int>(data.rows()), static_cast<int>(S.size()));
}

double aggregate_pvalues(const std::vector<double>& input, AggregatorKind kind, bool* clamped) {
    if (input.empty()) throw Error(ErrorKind::invalid_argument, "aggregate_pvalues needs a p-value");
    if (clamped) *clamped = false;
    std::vector<double> ps = input;
    for (double& p : ps) {
        if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorKind::invalid_argument, "p-value outside [0,1]");
        if (p == 0.0) {
            p = std::numeric_limits<double>::denorm_min();
            if (clamped) *clamped = true;
        }
    }
    if (ps.size() == 1) return input[0];
    const double m = static_cast<double>(ps.size());
    switch (kind) {
        case AggregatorKind::Fisher: {
            double stat = 0;
            for (double p : ps) stat += -2.0 * std::log(p);
            return std::clamp(chi2_sf(stat, 2 * m), 0.0, 1.0);
        }
        case AggregatorKind::Stouffer: {
            // two-sided: 2 Phi(-(1/sqrt m) sum Phi^{-1}(1 - p/2)); Phi^{-1}(1-p/2) = -Phi^{-1}(p/2)
            double s = 0;
            for (double p : ps) s += -normal_quantile(p / 2.0);
            return std::clamp(2.0 * normal_sf(s / std::sqrt(m)), 0.0, 1.0);
        }
        case AggregatorKind::Tippett: {
            double mn = *std::min_element(ps.begin(), ps.end());
            return std::clamp(-std::expm1(m * std::log1p(-mn)), 0.0, 1.0);
        }
        case AggregatorKind::Mean: {
            double s = 0;
            for (double p : ps) s += p;
            return std::clamp(s / m, 0.0, 1.0);
        }
    }
    return 1.0;
}

GaussianSummary summarize(const Eigen::MatrixXd& sample, double ridge) {
    GaussianSummary g;
    g.mean = sample.colwise().mean().transpose();
    Eigen::MatrixXd c = sample.rowwise() - g.mean.transpose();
    g.cov = (c.transpose() * c) / static_cast<double>(std::max<Eigen::Index>(sample.rows(), 1));
    g.cov.diagonal().array() += ridge;
    return g;
}

namespace {

double kl_one_way(const GaussianSummary& a, const GaussianSummary& b) {
    const int k = static_cast<int>(a.mean.size());
    Eigen::LLT<Eigen::MatrixXd> la(a.cov), lb(b.cov);
    if (la.info() != Eigen::Success || lb.info() != Eigen::Success)
        throw Error(ErrorKind::degenerate_overlap, "covariance not positive definite");
    Eigen::VectorXd dm = b.mean - a.mean;
    double tr = lb.solve(a.cov).trace();
    double quad = dm.dot(lb.solve(dm));
    double logdet_a = 2 * la.matrixLLT().diagonal().array().log().sum();
    double logdet_b = 2 * lb.matrixLLT().diagonal().array().log().sum();
    return 0.5 * (tr + quad - k + logdet_b - logdet_a);
}

}  // namespace

double gaussian_sym_kl(const GaussianSummary& a, const GaussianSummary& b) {
    if (a.mean.size() != b.mean.size()) throw Error(ErrorKind::dimension_mismatch, "summary dimensions");
    return std::max(0.0, 0.5 * (kl_one_way(a, b) + kl_one_way(b, a)));
}

namespace {

double mean_cross_distance(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    double s = 0;
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < b.rows(); ++j) s += (a.row(i) - b.row(j)).norm();
    return s / (static_cast<double>(a.rows()) * b.rows());
}

void check_pair(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    if (a.rows() == 0 || b.rows() == 0) throw Error(ErrorKind::invalid_argument, "empty sample");
    if (a.cols() != b.cols()) throw Error(ErrorKind::dimension_mismatch, "sample column counts differ");
}

}  // namespace

double energy_distance(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    check_pair(a, b);
    return 2 * mean_cross_distance(a, b) - mean_cross_distance(a, a) - mean_cross_distance(b, b);
}

double median_pairwise_distance(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    Eigen::MatrixXd all(a.rows() + b.rows(), a.cols());
    all << a, b;
    std::vector<double> dist;
    dist.reserve(all.rows() * (all.rows() - 1) / 2);
    for (int i = 0; i < all.rows(); ++i)
        for (int j = i + 1; j < all.rows(); ++j) dist.push_back((all.row(i) - all.row(j)).norm());
    if (dist.empty()) return 1.0;
    auto mid = dist.begin() + dist.size() / 2;
    std::nth_element(dist.begin(), mid, dist.end());
    return *mid > 0 ? *mid : 1.0;
}

double mmd(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double bandwidth) {
    check_pair(a, b);
    double h = bandwidth > 0 ? bandwidth : median_pairwise_distance(a, b);
    const double g = 1.0 / (2 * h * h);
    auto kmean = [g](const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
        double s = 0;
        for (int i = 0; i < x.rows(); ++i)
            for (int j = 0; j < y.rows(); ++j) s += std::exp(-g * (x.row(i) - y.row(j)).squaredNorm());
        return s / (static_cast<double>(x.rows()) * y.rows());
    };
    return std::max(0.0, kmean(a, a) + kmean(b, b) - 2 * kmean(a, b));
}

}  // namespace jstable
