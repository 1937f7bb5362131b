#include "slidemil/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "slidemil/errors.hpp"
#include "slidemil/numeric.hpp"
#include "slidemil/parallel.hpp"
#include "slidemil/rng.hpp"

namespace slidemil {

namespace {

bool covers_all_classes(const PredictionSet& sample, int n_classes) {
    std::vector<bool> present(static_cast<std::size_t>(n_classes), false);
    for (const auto& p : sample.items) {
        present[static_cast<std::size_t>(p.true_label)] = true;
    }
    return std::all_of(present.begin(), present.end(), [](bool b) { return b; });
}

}  // namespace

BootstrapEntry bootstrap_report(const PredictionSet& preds, const std::string& metric_name,
                                const MetricFn& metric, const BootstrapOptions& opts) {
    if (preds.items.empty()) {
        throw shape_error("bootstrap needs a non-empty prediction set");
    }
    if (opts.iterations < 1) {
        throw config_error("bootstrap iterations must be >= 1");
    }

    const std::size_t n = preds.items.size();
    std::vector<double> values(static_cast<std::size_t>(opts.iterations));
    parallel_for(static_cast<std::size_t>(opts.iterations), opts.workers, [&](std::size_t it) {
        Rng rng(derive_seed(opts.seed, it));
        PredictionSet sample;
        sample.n_classes = preds.n_classes;
        sample.items.resize(n);
        for (int attempt = 0;; ++attempt) {
            if (attempt > opts.max_retries) {
                throw degenerate_error("bootstrap resampling kept dropping a class after " +
                                       std::to_string(opts.max_retries) + " redraws");
            }
            for (std::size_t i = 0; i < n; ++i) {
                sample.items[i] = preds.items[rng.uniform_int(n)];
            }
            if (covers_all_classes(sample, preds.n_classes)) break;
        }
        values[it] = metric(sample);
    });

    BootstrapEntry entry;
    entry.metric = metric_name;
    entry.point = metric(preds);
    entry.boot_mean = mean(values);
    entry.ci_low = percentile(values, 2.5);
    entry.ci_high = percentile(values, 97.5);
    entry.iterations = opts.iterations;
    entry.seed = opts.seed;
    return entry;
}

double incomplete_beta(double a, double b, double x) {
    if (x < 0.0 || x > 1.0) {
        throw validation_error("incomplete beta needs x in [0, 1]");
    }
    if (x == 0.0) return 0.0;
    if (x == 1.0) return 1.0;

    // Continued fraction (Lentz), with the symmetry transform for fast
    // convergence.
    const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                            a * std::log(x) + b * std::log1p(-x);
    auto contfrac = [](double aa, double bb, double xx) {
        const double tiny = 1e-300;
        double c = 1.0;
        double d = 1.0 - (aa + bb) * xx / (aa + 1.0);
        if (std::fabs(d) < tiny) d = tiny;
        d = 1.0 / d;
        double h = d;
        for (int m = 1; m <= 500; ++m) {
            const double m2 = 2.0 * m;
            double num = m * (bb - m) * xx / ((aa + m2 - 1.0) * (aa + m2));
            d = 1.0 + num * d;
            if (std::fabs(d) < tiny) d = tiny;
            c = 1.0 + num / c;
            if (std::fabs(c) < tiny) c = tiny;
            d = 1.0 / d;
            h *= d * c;
            num = -(aa + m) * (aa + bb + m) * xx / ((aa + m2) * (aa + m2 + 1.0));
            d = 1.0 + num * d;
            if (std::fabs(d) < tiny) d = tiny;
            c = 1.0 + num / c;
            if (std::fabs(c) < tiny) c = tiny;
            d = 1.0 / d;
            const double delta = d * c;
            h *= delta;
            if (std::fabs(delta - 1.0) < 1e-15) break;
        }
        return h;
    };

    if (x < (a + 1.0) / (a + b + 2.0)) {
        return std::exp(ln_front) * contfrac(a, b, x) / a;
    }
    return 1.0 - std::exp(std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                          b * std::log1p(-x) + a * std::log(x)) *
                     contfrac(b, a, 1.0 - x) / b;
}

double t_two_sided_p(double t, int df) {
    if (df < 1) {
        throw validation_error("t distribution needs df >= 1");
    }
    const double x = df / (df + t * t);
    return incomplete_beta(df / 2.0, 0.5, x);
}

TTestResult paired_t_test(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) {
        throw shape_error("paired t-test needs samples of equal length");
    }
    const std::size_t n = a.size();
    if (n < 2) {
        throw shape_error("paired t-test needs at least two pairs");
    }
    std::vector<double> d(n);
    for (std::size_t i = 0; i < n; ++i) d[i] = a[i] - b[i];
    const double d_mean = mean(d);
    double ss = 0.0;
    for (double v : d) ss += (v - d_mean) * (v - d_mean);
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));

    TTestResult res;
    if (sd == 0.0) {
        res.degenerate = true;
        if (d_mean == 0.0) {
            res.t = 0.0;
            res.p = 1.0;
        } else {
            res.t = d_mean > 0.0 ? std::numeric_limits<double>::infinity()
                                 : -std::numeric_limits<double>::infinity();
            res.p = 0.0;
        }
        return res;
    }
    res.t = d_mean / (sd / std::sqrt(static_cast<double>(n)));
    res.p = t_two_sided_p(res.t, static_cast<int>(n) - 1);
    return res;
}

std::vector<double> bh_fdr(const std::vector<double>& pvals) {
    const std::size_t m = pvals.size();
    for (double p : pvals) {
        if (!(p >= 0.0 && p <= 1.0)) {
            throw validation_error("p-values must lie in [0, 1]");
        }
    }
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return pvals[x] < pvals[y]; });

    std::vector<double> adjusted(m);
    double running_min = 1.0;
    for (std::size_t rank = m; rank >= 1; --rank) {
        const std::size_t idx = order[rank - 1];
        // m/rank >= 1, so q >= p holds mathematically; the max guards the
        // one-ulp rounding of the multiply-divide.
        const double q =
            std::max(pvals[idx], pvals[idx] * static_cast<double>(m) / static_cast<double>(rank));
        running_min = std::min(running_min, std::min(q, 1.0));
        adjusted[idx] = running_min;
    }
    return adjusted;
}

LinearFit fit_linear_r2(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) {
        throw shape_error("linear fit needs two equal-length samples of size >= 2");
    }
    const double x_mean = mean(x);
    const double y_mean = mean(y);
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - x_mean) * (x[i] - x_mean);
        sxy += (x[i] - x_mean) * (y[i] - y_mean);
        syy += (y[i] - y_mean) * (y[i] - y_mean);
    }
    if (sxx == 0.0) {
        throw degenerate_error("linear fit undefined for constant x");
    }
    LinearFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = y_mean - fit.slope * x_mean;
    if (syy == 0.0) {
        fit.r_squared = 0.0;
        return fit;
    }
    double ss_res = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double resid = y[i] - (fit.slope * x[i] + fit.intercept);
        ss_res += resid * resid;
    }
    fit.r_squared = 1.0 - ss_res / syy;
    return fit;
}

}  // namespace slidemil
