#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace parcelqc {

enum class Sex { F, M };

struct SubjectRecord {
    std::string subject_id;
    double age = 0.0;
    Sex sex = Sex::F;
    std::string site; // optional
};

struct CohortSummary {
    double mean = 0.0;
    double stddev = 0.0; // sample stddev (n-1); defined as 0 for n = 1
    double min = 0.0;
    double median = 0.0;
    double max = 0.0;
    std::int64_t n = 0;
};

struct WilcoxonResult {
    double statistic = 0.0;    // W+: rank sum of positive differences
    double p_two_sided = 1.0;
    std::int64_t n_effective = 0; // pairs left after discarding zero differences
    bool exact = false;        // exact tail enumeration vs normal approximation
};

/// Paired Wilcoxon signed-rank test. Zero differences are discarded, tied
/// absolute differences receive average ranks. The tail is exact for up to
/// exact_cutoff effective pairs (default 25); beyond that a tie- and
/// continuity-corrected normal approximation is used. Lowering exact_cutoff
/// forces the approximation, which is how the two modes get compared.
/// Throws on length mismatch or when every difference is zero.
WilcoxonResult wilcoxon_signed_rank(const std::vector<double>& x, const std::vector<double>& y,
                                    int exact_cutoff = 25);

/// Mean, sample stddev, min, interpolated median and max. Throws on empty
/// input.
CohortSummary cohort_summary(const std::vector<double>& values);

/// Linear-interpolation percentile, p in [0, 100].
double percentile(std::vector<double> values, double p);
double percentile_sorted(const std::vector<double>& sorted, double p);

struct SplitResult {
    std::vector<std::string> train_ids;
    std::vector<std::string> test_ids;
};

/// Stratified train/test split over (floor(age / age_bin_years), sex) strata.
/// Per-stratum test counts follow the largest-remainder rule so the overall
/// test count equals round(n * test_fraction); selection within a stratum is
/// uniform under the seed. Output id lists keep the input order.
SplitResult stratified_split(const std::vector<SubjectRecord>& records, double test_fraction,
                             int age_bin_years, std::uint64_t seed);

/// Subject manifest CSV: subject_id,age,sex,site (site optional). Sex is
/// "F" or "M". Ids must be unique, ages non-negative.
std::vector<SubjectRecord> read_subject_manifest(const std::string& path);

} // namespace parcelqc
