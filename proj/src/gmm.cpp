#include "parcelqc/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "parcelqc/cohort_stats.hpp"
#include "parcelqc/error.hpp"

namespace parcelqc {

namespace {

constexpr double kLog2Pi = 1.8378770664093455;

double log_normal_pdf(double x, double mean, double stddev) {
    const double z = (x - mean) / stddev;
    return -0.5 * (kLog2Pi + z * z) - std::log(stddev);
}

} // namespace

GmmFit fit_gmm2(const std::vector<double>& scores, double tol, int max_iter, std::uint64_t seed) {
    (void)seed;
    const std::size_t n = scores.size();
    if (n < 8) throw Error("too few scores for a mixture fit (need >= 8, got " +
                           std::to_string(n) + ")");
    if (max_iter < 1) throw Error("max_iter must be >= 1");

    double sum = 0.0;
    double lo = scores[0], hi = scores[0];
    for (double s : scores) {
        if (!std::isfinite(s)) throw Error("non-finite score");
        sum += s;
        lo = std::min(lo, s);
        hi = std::max(hi, s);
    }
    const double mean_all = sum / static_cast<double>(n);
    double ss = 0.0;
    for (double s : scores) ss += (s - mean_all) * (s - mean_all);
    const double sample_std = std::sqrt(ss / static_cast<double>(n - 1));
    if (sample_std < 1e-12) throw Error("degenerate: zero variance in scores");

    const double range = hi - lo;
    const double sigma_floor = 1e-6 * range;

    GmmFit fit;
    fit.mean = {percentile(scores, 25.0), percentile(scores, 75.0)};
    if (fit.mean[1] - fit.mean[0] < 1e-12 * range) {
        // Identical starts would lock EM into a symmetric fixed point.
        fit.mean[0] -= 0.25 * sample_std;
        fit.mean[1] += 0.25 * sample_std;
    }
    fit.stddev = {std::max(0.5 * sample_std, sigma_floor), std::max(0.5 * sample_std, sigma_floor)};
    fit.weight = {0.5, 0.5};

    std::vector<double> resp(n); // responsibility of component 0
    double prev_ll = -std::numeric_limits<double>::infinity();
    bool converged = false;

    for (int iter = 0; iter < max_iter; ++iter) {
        // E-step
        double ll = 0.0;
        const double lw0 = std::log(fit.weight[0]);
        const double lw1 = std::log(fit.weight[1]);
        for (std::size_t i = 0; i < n; ++i) {
            const double l0 = lw0 + log_normal_pdf(scores[i], fit.mean[0], fit.stddev[0]);
            const double l1 = lw1 + log_normal_pdf(scores[i], fit.mean[1], fit.stddev[1]);
            const double m = std::max(l0, l1);
            const double e0 = std::exp(l0 - m);
            const double e1 = std::exp(l1 - m);
            resp[i] = e0 / (e0 + e1);
            ll += m + std::log(e0 + e1);
        }
        fit.ll_history.push_back(ll);
        fit.iterations = iter + 1;
        fit.log_likelihood = ll;
        if (ll - prev_ll < tol && iter > 0) {
            converged = true;
            break;
        }
        prev_ll = ll;

        // M-step; a component whose responsibility mass vanished keeps its
        // parameters instead of dividing by ~0.
        double n0 = 0.0, s0 = 0.0, s1 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            n0 += resp[i];
            s0 += resp[i] * scores[i];
            s1 += (1.0 - resp[i]) * scores[i];
        }
        const double n1 = static_cast<double>(n) - n0;
        const bool live0 = n0 > 1e-8;
        const bool live1 = n1 > 1e-8;
        if (live0) fit.mean[0] = s0 / n0;
        if (live1) fit.mean[1] = s1 / n1;
        double v0 = 0.0, v1 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d0 = scores[i] - fit.mean[0];
            const double d1 = scores[i] - fit.mean[1];
            v0 += resp[i] * d0 * d0;
            v1 += (1.0 - resp[i]) * d1 * d1;
        }
        if (live0) fit.stddev[0] = std::max(std::sqrt(v0 / n0), sigma_floor);
        if (live1) fit.stddev[1] = std::max(std::sqrt(v1 / n1), sigma_floor);
        fit.weight[0] = std::clamp(n0 / static_cast<double>(n), 1e-10, 1.0 - 1e-10);
        fit.weight[1] = 1.0 - fit.weight[0];
    }

    if (!converged) {
        // Exited on the iteration cap: the last M-step has not been scored
        // yet, so refresh the reported likelihood for the final parameters.
        double ll = 0.0;
        const double lw0 = std::log(fit.weight[0]);
        const double lw1 = std::log(fit.weight[1]);
        for (std::size_t i = 0; i < n; ++i) {
            const double l0 = lw0 + log_normal_pdf(scores[i], fit.mean[0], fit.stddev[0]);
            const double l1 = lw1 + log_normal_pdf(scores[i], fit.mean[1], fit.stddev[1]);
            const double m = std::max(l0, l1);
            ll += m + std::log(std::exp(l0 - m) + std::exp(l1 - m));
        }
        fit.ll_history.push_back(ll);
        fit.log_likelihood = ll;
    }

    if (fit.mean[0] > fit.mean[1]) {
        std::swap(fit.mean[0], fit.mean[1]);
        std::swap(fit.stddev[0], fit.stddev[1]);
        std::swap(fit.weight[0], fit.weight[1]);
    }
    fit.threshold = rejection_threshold(fit);
    return fit;
}

GmmFit fit_gmm2(const QcScoreSet& scores, double tol, int max_iter, std::uint64_t seed) {
    return fit_gmm2(scores.scores(), tol, max_iter, seed);
}

double rejection_threshold(const GmmFit& fit) {
    const int low = fit.mean[0] <= fit.mean[1] ? 0 : 1;
    return fit.mean[low] + kStdNormal90 * fit.stddev[low];
}

std::vector<std::pair<std::string, bool>> classify_scores(const QcScoreSet& scores,
                                                          double threshold) {
    std::vector<std::pair<std::string, bool>> out;
    out.reserve(scores.entries.size());
    for (const auto& e : scores.entries) out.emplace_back(e.subject_id, e.score > threshold);
    return out;
}

} // namespace parcelqc
