#include "parcelqc/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "parcelqc/csv.hpp"
#include "parcelqc/error.hpp"

namespace parcelqc::report {

std::string summary_row(const CohortSummary& s) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%.2f ± %.2f | %.2f | %.2f | %.2f", s.mean, s.stddev, s.min,
                  s.median, s.max);
    return buf;
}

Histogram make_histogram(const std::vector<double>& values, double bin_width) {
    if (values.empty()) throw Error("histogram of empty data");
    if (!(bin_width > 0.0)) throw Error("histogram bin width must be positive");

    const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
    Histogram h;
    h.bin_width = bin_width;
    h.origin = *mn;
    const double range = *mx - *mn;
    const auto bins = std::max<std::int64_t>(
        1, static_cast<std::int64_t>(std::ceil(range / bin_width)));
    h.counts.assign(static_cast<std::size_t>(bins), 0);
    for (double v : values) {
        auto bin = static_cast<std::int64_t>(std::floor((v - h.origin) / bin_width));
        bin = std::clamp<std::int64_t>(bin, 0, bins - 1); // max value lands in the last bin
        ++h.counts[static_cast<std::size_t>(bin)];
    }
    return h;
}

void write_histogram_csv(const std::string& path, const Histogram& hist) {
    std::vector<std::vector<std::string>> rows;
    rows.reserve(hist.counts.size());
    for (std::size_t i = 0; i < hist.counts.size(); ++i) {
        rows.push_back({csv::format_double(hist.origin + static_cast<double>(i) * hist.bin_width),
                        std::to_string(hist.counts[i])});
    }
    csv::write_table(path, {"bin_left", "count"}, rows);
}

std::string fit_json_text(const GmmFit& fit) {
    nlohmann::ordered_json j;
    j["phi"] = {fit.weight[0], fit.weight[1]};
    j["mu"] = {fit.mean[0], fit.mean[1]};
    j["sigma"] = {fit.stddev[0], fit.stddev[1]};
    j["threshold"] = fit.threshold;
    j["iterations"] = fit.iterations;
    j["log_likelihood"] = fit.log_likelihood;
    return j.dump(2) + "\n";
}

void write_fit_json(const std::string& path, const GmmFit& fit) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write file: " + path);
    out << fit_json_text(fit);
    out.flush();
    if (!out) throw Error("write failed: " + path);
}

} // namespace parcelqc::report
