#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "slidemil/predictions.hpp"

namespace slidemil {

struct BootstrapEntry {
    std::string metric;
    double point = 0.0;
    double boot_mean = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    int iterations = 0;
    std::uint64_t seed = 0;
};

struct BootstrapOptions {
    int iterations = 10000;
    std::uint64_t seed = 0;
    int max_retries = 1000;  // redraws allowed when a resample drops a class
    int workers = 1;
};

using MetricFn = std::function<double(const PredictionSet&)>;

// Percentile bootstrap (2.5/97.5) of a metric over resamples with
// replacement. Resamples that drop a true class are redrawn. Per-iteration
// seeds derive from (seed, iteration), so the report is identical for any
// worker count.
BootstrapEntry bootstrap_report(const PredictionSet& preds, const std::string& metric_name,
                                const MetricFn& metric, const BootstrapOptions& opts);

struct TTestResult {
    double t = 0.0;
    double p = 1.0;
    bool degenerate = false;  // zero-variance differences
};

// Two-sided paired t-test on differences a - b, sample (n-1) deviation,
// p-value from the regularised incomplete beta function.
TTestResult paired_t_test(const std::vector<double>& a, const std::vector<double>& b);

// Benjamini-Hochberg step-up adjustment, results in the input order.
std::vector<double> bh_fdr(const std::vector<double>& pvals);

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
};

// Least-squares line with the coefficient of determination.
LinearFit fit_linear_r2(const std::vector<double>& x, const std::vector<double>& y);

// Regularised incomplete beta I_x(a, b); exposed for the statistics tests.
double incomplete_beta(double a, double b, double x);

// CDF-complement helper: two-sided Student-t p-value for a statistic with
// the given degrees of freedom.
double t_two_sided_p(double t, int df);

}  // namespace slidemil
