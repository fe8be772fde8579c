#pragma once

#include <string>
#include <vector>

#include "parcelqc/cohort_stats.hpp"
#include "parcelqc/gmm.hpp"

namespace parcelqc::report {

/// Summary-table row "mean ± std | min | median | max", two decimals,
/// e.g. "0.90 ± 0.02 | 0.75 | 0.91 | 0.93".
std::string summary_row(const CohortSummary& s);

struct Histogram {
    double bin_width = 0.0;
    double origin = 0.0; // left edge of the first bin
    std::vector<std::int64_t> counts;
};

inline constexpr double kDefaultScoreBinWidth = 0.01;

/// ceil(range / bin_width) bins starting at the minimum value; a degenerate
/// range yields a single bin.
Histogram make_histogram(const std::vector<double>& values, double bin_width);

/// CSV with header bin_left,count.
void write_histogram_csv(const std::string& path, const Histogram& hist);

/// {"phi": [...], "mu": [...], "sigma": [...], "threshold": ...,
///  "iterations": ..., "log_likelihood": ...}
void write_fit_json(const std::string& path, const GmmFit& fit);
std::string fit_json_text(const GmmFit& fit);

} // namespace parcelqc::report
