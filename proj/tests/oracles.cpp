#include "oracles.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>

namespace oracles {

namespace {

double percentile_linear(std::vector<double> values, double p) {
    std::sort(values.begin(), values.end());
    const double h = (p / 100.0) * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double frac = h - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

std::vector<std::array<int, 3>> boundary_direct(const parcelqc::LabelMap& m, int label) {
    const int nx = m.geometry.dims[0], ny = m.geometry.dims[1], nz = m.geometry.dims[2];
    const auto l = static_cast<std::uint16_t>(label);
    std::vector<std::array<int, 3>> out;
    const int offsets[6][3] = {{-1, 0, 0}, {1, 0, 0}, {0, -1, 0}, {0, 1, 0}, {0, 0, -1}, {0, 0, 1}};
    for (int z = 0; z < nz; ++z)
        for (int y = 0; y < ny; ++y)
            for (int x = 0; x < nx; ++x) {
                if (m.at(x, y, z) != l) continue;
                bool edge = false;
                for (const auto& o : offsets) {
                    const int ux = x + o[0], uy = y + o[1], uz = z + o[2];
                    if (ux < 0 || ux >= nx || uy < 0 || uy >= ny || uz < 0 || uz >= nz ||
                        m.at(ux, uy, uz) != l) {
                        edge = true;
                        break;
                    }
                }
                if (edge) out.push_back({x, y, z});
            }
    return out;
}

} // namespace

std::vector<double> box_filter_direct(const parcelqc::Volume3D& v, int radius) {
    const int nx = v.geometry.dims[0], ny = v.geometry.dims[1], nz = v.geometry.dims[2];
    std::vector<double> out(v.geometry.voxel_count());
    std::size_t i = 0;
    for (int z = 0; z < nz; ++z)
        for (int y = 0; y < ny; ++y)
            for (int x = 0; x < nx; ++x, ++i) {
                double sum = 0.0;
                long count = 0;
                for (int w = std::max(0, z - radius); w <= std::min(nz - 1, z + radius); ++w)
                    for (int u = std::max(0, y - radius); u <= std::min(ny - 1, y + radius); ++u)
                        for (int t = std::max(0, x - radius); t <= std::min(nx - 1, x + radius); ++t) {
                            sum += static_cast<double>(v.at(t, u, w));
                            ++count;
                        }
                out[i] = sum / static_cast<double>(count);
            }
    return out;
}

double pearson_direct(const parcelqc::Volume3D& a, const parcelqc::Volume3D& b,
                      const parcelqc::LabelMap& mask) {
    double sum_a = 0.0, sum_b = 0.0;
    long n = 0;
    for (std::size_t i = 0; i < mask.labels.size(); ++i) {
        if (mask.labels[i] > 0) {
            sum_a += static_cast<double>(a.voxels[i]);
            sum_b += static_cast<double>(b.voxels[i]);
            ++n;
        }
    }
    const double mean_a = sum_a / static_cast<double>(n);
    const double mean_b = sum_b / static_cast<double>(n);
    double saa = 0.0, sbb = 0.0, sab = 0.0;
    for (std::size_t i = 0; i < mask.labels.size(); ++i) {
        if (mask.labels[i] > 0) {
            const double da = static_cast<double>(a.voxels[i]) - mean_a;
            const double db = static_cast<double>(b.voxels[i]) - mean_b;
            saa += da * da;
            sbb += db * db;
            sab += da * db;
        }
    }
    return sab / std::sqrt(saa * sbb);
}

double median_by_sort(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    if (n % 2 == 1) return values[n / 2];
    return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

std::optional<double> dice_direct(const parcelqc::LabelMap& gt, const parcelqc::LabelMap& pred,
                                  int label) {
    long a = 0, b = 0, inter = 0;
    for (std::size_t i = 0; i < gt.labels.size(); ++i) {
        const bool in_a = gt.labels[i] == label;
        const bool in_b = pred.labels[i] == label;
        a += in_a;
        b += in_b;
        inter += in_a && in_b;
    }
    if (a + b == 0) return std::nullopt;
    return 2.0 * static_cast<double>(inter) / static_cast<double>(a + b);
}

std::optional<double> sd95_allpairs(const parcelqc::LabelMap& gt, const parcelqc::LabelMap& pred,
                                    int label) {
    const auto bnd_a = boundary_direct(gt, label);
    const auto bnd_b = boundary_direct(pred, label);
    if (bnd_a.empty() || bnd_b.empty()) return std::nullopt;

    const auto& sp = gt.geometry.spacing;
    auto nearest = [&sp](const std::array<int, 3>& p, const std::vector<std::array<int, 3>>& set) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& q : set) {
            const double dx = (p[0] - q[0]) * sp[0];
            const double dy = (p[1] - q[1]) * sp[1];
            const double dz = (p[2] - q[2]) * sp[2];
            best = std::min(best, dx * dx + dy * dy + dz * dz);
        }
        return std::sqrt(best);
    };

    std::vector<double> pooled;
    pooled.reserve(bnd_a.size() + bnd_b.size());
    for (const auto& p : bnd_a) pooled.push_back(nearest(p, bnd_b));
    for (const auto& p : bnd_b) pooled.push_back(nearest(p, bnd_a));
    return percentile_linear(std::move(pooled), 95.0);
}

double wilcoxon_exact_enumeration(const std::vector<double>& x, const std::vector<double>& y) {
    std::vector<double> diffs;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - y[i];
        if (d != 0.0) diffs.push_back(d);
    }
    const std::size_t n = diffs.size();

    // Average ranks of |d|.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return std::fabs(diffs[a]) < std::fabs(diffs[b]);
    });
    std::vector<double> ranks(n);
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j + 1 < n && std::fabs(diffs[order[j + 1]]) == std::fabs(diffs[order[i]])) ++j;
        const double avg = 0.5 * static_cast<double>(i + 1 + j + 1);
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
        i = j + 1;
    }

    double w_obs = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        if (diffs[i] > 0.0) w_obs += ranks[i];

    // Every sign assignment is equally likely under the null.
    const std::uint64_t total = 1ull << n;
    std::uint64_t le = 0, ge = 0;
    for (std::uint64_t bits = 0; bits < total; ++bits) {
        double w = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            if (bits & (1ull << i)) w += ranks[i];
        if (w <= w_obs + 1e-12) ++le;
        if (w >= w_obs - 1e-12) ++ge;
    }
    const double tail = static_cast<double>(std::min(le, ge)) / static_cast<double>(total);
    return std::min(1.0, 2.0 * tail);
}

double normal_quantile(double p) {
    auto cdf = [](double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); };
    double lo = -10.0, hi = 10.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (cdf(mid) < p ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

} // namespace oracles
