#pragma once

// Independent reference implementations used to pin expected values.
// Everything here is deliberately written as straight-line/brute-force code
// with no calls into the library paths it checks.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <vector>

#include "slidemil/abmil.hpp"
#include "slidemil/predictions.hpp"

namespace oracles {

// ---------------------------------------------------------------------------
// ABMIL forward, recomputed with plain loops.
// ---------------------------------------------------------------------------

struct PlainForward {
    std::vector<double> attention;
    std::vector<double> logits;
};

inline PlainForward plain_forward(const std::vector<std::vector<double>>& h,
                                  const slidemil::AbmilParams& p) {
    const std::size_t n = h.size();
    const std::size_t dim = h[0].size();
    const std::size_t m1 = static_cast<std::size_t>(p.m1());
    const std::size_t m2 = static_cast<std::size_t>(p.m2());
    const std::size_t k = static_cast<std::size_t>(p.k());

    std::vector<std::vector<double>> u(n, std::vector<double>(m1, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m1; ++j) {
            double acc = p.b1[static_cast<Eigen::Index>(j)];
            for (std::size_t d = 0; d < dim; ++d) {
                acc += h[i][d] * p.w1(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(j));
            }
            u[i][j] = acc > 0.0 ? acc : 0.0;
        }
    }

    std::vector<double> scores(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < m2; ++j) {
            double acc = p.bv[static_cast<Eigen::Index>(j)];
            for (std::size_t q = 0; q < m1; ++q) {
                acc += u[i][q] * p.v(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(j));
            }
            s += std::tanh(acc) * p.w[static_cast<Eigen::Index>(j)];
        }
        scores[i] = s;
    }

    const double smax = *std::max_element(scores.begin(), scores.end());
    double denom = 0.0;
    for (double s : scores) denom += std::exp(s - smax);
    PlainForward out;
    out.attention.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.attention[i] = std::exp(scores[i] - smax) / denom;
    }

    std::vector<double> z(m1, 0.0);
    for (std::size_t j = 0; j < m1; ++j) {
        for (std::size_t i = 0; i < n; ++i) z[j] += out.attention[i] * u[i][j];
    }
    out.logits.resize(k);
    for (std::size_t c = 0; c < k; ++c) {
        double acc = p.b2[static_cast<Eigen::Index>(c)];
        for (std::size_t j = 0; j < m1; ++j) {
            acc += z[j] * p.w2(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(c));
        }
        out.logits[c] = acc;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Central finite differences over every parameter component.
// ---------------------------------------------------------------------------

// Max relative error between analytic and finite-difference gradients, with
// a small floor so that genuinely zero components do not divide by zero.
inline double gradient_check(const Eigen::MatrixXd& features, slidemil::AbmilParams params,
                             int label, const std::vector<double>& class_weights,
                             const slidemil::TrainConfig& config, bool training_mode,
                             std::uint64_t dropout_seed, double h = 1e-5) {
    using namespace slidemil;
    const auto loss_at = [&]() {
        const ForwardResult res = forward(features, params, training_mode, dropout_seed, config);
        return balanced_ce_loss(predict_proba(res.logits), label, class_weights);
    };
    const ForwardResult res = forward(features, params, training_mode, dropout_seed, config);
    const AbmilParams analytic = backward(params, res.cache, label, class_weights);

    double max_rel = 0.0;
    auto check_tensor = [&](Eigen::MatrixXd& theta, const Eigen::MatrixXd& grad) {
        for (Eigen::Index i = 0; i < theta.rows(); ++i) {
            for (Eigen::Index j = 0; j < theta.cols(); ++j) {
                const double orig = theta(i, j);
                theta(i, j) = orig + h;
                const double up = loss_at();
                theta(i, j) = orig - h;
                const double down = loss_at();
                theta(i, j) = orig;
                const double fd = (up - down) / (2.0 * h);
                const double a = grad(i, j);
                const double rel = std::fabs(a - fd) / std::max({std::fabs(a), std::fabs(fd), 1e-6});
                max_rel = std::max(max_rel, rel);
            }
        }
    };
    auto check_vector = [&](Eigen::VectorXd& theta, const Eigen::VectorXd& grad) {
        for (Eigen::Index i = 0; i < theta.size(); ++i) {
            const double orig = theta[i];
            theta[i] = orig + h;
            const double up = loss_at();
            theta[i] = orig - h;
            const double down = loss_at();
            theta[i] = orig;
            const double fd = (up - down) / (2.0 * h);
            const double a = grad[i];
            const double rel = std::fabs(a - fd) / std::max({std::fabs(a), std::fabs(fd), 1e-6});
            max_rel = std::max(max_rel, rel);
        }
    };
    check_tensor(params.w1, analytic.w1);
    check_vector(params.b1, analytic.b1);
    check_tensor(params.v, analytic.v);
    check_vector(params.bv, analytic.bv);
    check_vector(params.w, analytic.w);
    check_tensor(params.w2, analytic.w2);
    check_vector(params.b2, analytic.b2);
    return max_rel;
}

// ---------------------------------------------------------------------------
// Metric oracles.
// ---------------------------------------------------------------------------

inline double balanced_accuracy_bruteforce(const slidemil::PredictionSet& preds) {
    double acc = 0.0;
    for (int c = 0; c < preds.n_classes; ++c) {
        long total = 0, correct = 0;
        for (const auto& p : preds.items) {
            if (p.true_label != c) continue;
            ++total;
            if (p.predicted == c) ++correct;
        }
        acc += static_cast<double>(correct) / static_cast<double>(total);
    }
    return acc / preds.n_classes;
}

inline double macro_f1_bruteforce(const slidemil::PredictionSet& preds) {
    double total = 0.0;
    for (int c = 0; c < preds.n_classes; ++c) {
        double tp = 0, pred_c = 0, true_c = 0;
        for (const auto& p : preds.items) {
            if (p.predicted == c) ++pred_c;
            if (p.true_label == c) ++true_c;
            if (p.predicted == c && p.true_label == c) ++tp;
        }
        const double precision = pred_c > 0 ? tp / pred_c : 0.0;
        const double recall = true_c > 0 ? tp / true_c : 0.0;
        total += (precision + recall) > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
    }
    return total / preds.n_classes;
}

// All positive-negative pairs, ties worth 0.5.
inline double macro_auroc_paircount(const slidemil::PredictionSet& preds) {
    double total = 0.0;
    for (int c = 0; c < preds.n_classes; ++c) {
        double wins = 0.0;
        long pairs = 0;
        for (const auto& pos : preds.items) {
            if (pos.true_label != c) continue;
            for (const auto& neg : preds.items) {
                if (neg.true_label == c) continue;
                ++pairs;
                const double sp = pos.probs[static_cast<std::size_t>(c)];
                const double sn = neg.probs[static_cast<std::size_t>(c)];
                if (sp > sn) {
                    wins += 1.0;
                } else if (sp == sn) {
                    wins += 0.5;
                }
            }
        }
        total += wins / static_cast<double>(pairs);
    }
    return total / preds.n_classes;
}

// ---------------------------------------------------------------------------
// Otsu: exhaustive search, recomputing both class variances per cut.
// ---------------------------------------------------------------------------

inline int otsu_bruteforce(const std::array<std::uint64_t, 256>& hist) {
    int best_t = -1;
    double best_between = -1.0;
    for (int t = 0; t <= 254; ++t) {
        double n0 = 0, n1 = 0, s0 = 0, s1 = 0;
        for (int v = 0; v < 256; ++v) {
            const double count = static_cast<double>(hist[static_cast<std::size_t>(v)]);
            if (v <= t) {
                n0 += count;
                s0 += count * v;
            } else {
                n1 += count;
                s1 += count * v;
            }
        }
        if (n0 == 0 || n1 == 0) continue;
        const double m0 = s0 / n0, m1 = s1 / n1;
        const double between = n0 * n1 * (m1 - m0) * (m1 - m0);
        if (between > best_between) {
            best_between = between;
            best_t = t;
        }
    }
    return best_t;
}

// ---------------------------------------------------------------------------
// Statistics oracles.
// ---------------------------------------------------------------------------

// Literal step-up definition: q_(i) = p_(i) * m / i, cumulative minimum from
// the largest rank, capped at 1.
inline std::vector<double> bh_fdr_literal(const std::vector<double>& pvals) {
    const std::size_t m = pvals.size();
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return pvals[a] < pvals[b]; });
    std::vector<double> q(m);
    for (std::size_t r = 0; r < m; ++r) {
        q[r] = pvals[order[r]] * static_cast<double>(m) / static_cast<double>(r + 1);
    }
    for (std::size_t r = m; r-- > 1;) {
        q[r - 1] = std::min(q[r - 1], q[r]);
    }
    std::vector<double> out(m);
    for (std::size_t r = 0; r < m; ++r) {
        out[order[r]] = std::min(1.0, q[r]);
    }
    return out;
}

inline double t_density(double x, int df) {
    const double v = static_cast<double>(df);
    const double log_norm =
        std::lgamma((v + 1.0) / 2.0) - std::lgamma(v / 2.0) - 0.5 * std::log(v * M_PI);
    return std::exp(log_norm - (v + 1.0) / 2.0 * std::log1p(x * x / v));
}

inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                               double eps, int depth) {
    const double c = (a + b) / 2.0;
    const double h = b - a;
    const double fa = f(a), fb = f(b), fc = f(c);
    const double s = h / 6.0 * (fa + 4.0 * fc + fb);
    const double d = (a + c) / 2.0, e = (c + b) / 2.0;
    const double fd = f(d), fe = f(e);
    const double s_left = (c - a) / 6.0 * (fa + 4.0 * fd + fc);
    const double s_right = (b - c) / 6.0 * (fc + 4.0 * fe + fb);
    if (depth <= 0 || std::fabs(s_left + s_right - s) < 15.0 * eps) {
        return s_left + s_right + (s_left + s_right - s) / 15.0;
    }
    return adaptive_simpson(f, a, c, eps / 2.0, depth - 1) +
           adaptive_simpson(f, c, b, eps / 2.0, depth - 1);
}

// Two-sided p-value by quadrature of the t density: integrating the central
// interval sidesteps the heavy tails (p = 1 - 2 int_0^|t| pdf).
inline double t_two_sided_p_quadrature(double t, int df) {
    const double at = std::fabs(t);
    if (at == 0.0) return 1.0;
    const double central =
        adaptive_simpson([df](double x) { return t_density(x, df); }, 0.0, at, 1e-13, 44);
    return std::clamp(1.0 - 2.0 * central, 0.0, 1.0);
}

// ---------------------------------------------------------------------------
// Linear fit via the normal equations.
// ---------------------------------------------------------------------------

struct PlainFit {
    double slope, intercept, r_squared;
};

inline PlainFit linear_fit_normal_equations(const std::vector<double>& x,
                                            const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    const double det = n * sxx - sx * sx;
    PlainFit fit{};
    fit.slope = (n * sxy - sx * sy) / det;
    fit.intercept = (sy * sxx - sx * sxy) / det;
    double ss_res = 0, ss_tot = 0;
    const double mean_y = sy / n;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double pred = fit.slope * x[i] + fit.intercept;
        ss_res += (y[i] - pred) * (y[i] - pred);
        ss_tot += (y[i] - mean_y) * (y[i] - mean_y);
    }
    fit.r_squared = ss_tot == 0.0 ? 0.0 : 1.0 - ss_res / ss_tot;
    return fit;
}

}  // namespace oracles
