#include "parcelqc/cohort_stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>

#include "parcelqc/csv.hpp"
#include "parcelqc/error.hpp"
#include "parcelqc/rng.hpp"

namespace parcelqc {

namespace {

// Ascending ranks of |d| with average ranks over tie groups. Average ranks
// are always multiples of 1/2, so twice the rank is integral.
std::vector<double> ranked_abs(const std::vector<double>& diffs) {
    const std::size_t n = diffs.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return std::fabs(diffs[a]) < std::fabs(diffs[b]);
    });

    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && std::fabs(diffs[order[j + 1]]) == std::fabs(diffs[order[i]])) ++j;
        const double avg = 0.5 * static_cast<double>(i + 1 + j + 1);
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
        i = j + 1;
    }
    return ranks;
}

double exact_two_sided_p(const std::vector<double>& ranks, double w_plus) {
    const std::size_t n = ranks.size();
    std::int64_t max2 = 0;
    std::vector<std::int64_t> r2(n);
    for (std::size_t i = 0; i < n; ++i) {
        r2[i] = std::llround(2.0 * ranks[i]);
        max2 += r2[i];
    }

    // Subset-sum counts over doubled ranks: dp[s] = number of sign
    // assignments whose positive-rank sum equals s/2.
    std::vector<std::uint64_t> dp(static_cast<std::size_t>(max2) + 1, 0);
    dp[0] = 1;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::int64_t s = max2; s >= r2[i]; --s)
            dp[static_cast<std::size_t>(s)] += dp[static_cast<std::size_t>(s - r2[i])];
    }

    const std::int64_t w2 = std::llround(2.0 * w_plus);
    std::uint64_t le = 0, ge = 0;
    for (std::int64_t s = 0; s <= max2; ++s) {
        if (s <= w2) le += dp[static_cast<std::size_t>(s)];
        if (s >= w2) ge += dp[static_cast<std::size_t>(s)];
    }
    const double total = std::ldexp(1.0, static_cast<int>(n)); // 2^n
    const double tail = static_cast<double>(std::min(le, ge)) / total;
    return std::min(1.0, 2.0 * tail);
}

double normal_two_sided_p(const std::vector<double>& ranks, double w_plus) {
    const auto n = static_cast<double>(ranks.size());
    const double mu = n * (n + 1.0) / 4.0;

    // Tie correction to the variance.
    std::vector<double> sorted(ranks);
    std::sort(sorted.begin(), sorted.end());
    double tie_term = 0.0;
    std::size_t i = 0;
    while (i < sorted.size()) {
        std::size_t j = i;
        while (j + 1 < sorted.size() && sorted[j + 1] == sorted[i]) ++j;
        const double t = static_cast<double>(j - i + 1);
        tie_term += t * t * t - t;
        i = j + 1;
    }
    const double sigma2 = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term / 48.0;
    if (sigma2 <= 0.0) throw Error("degenerate rank variance");

    const double z = std::max(0.0, std::fabs(w_plus - mu) - 0.5) / std::sqrt(sigma2);
    const double p = std::erfc(z / std::sqrt(2.0));
    return std::max(p, std::numeric_limits<double>::min());
}

} // namespace

WilcoxonResult wilcoxon_signed_rank(const std::vector<double>& x, const std::vector<double>& y,
                                    int exact_cutoff) {
    if (x.size() != y.size())
        throw Error("wilcoxon: length mismatch (" + std::to_string(x.size()) + " vs " +
                    std::to_string(y.size()) + ")");
    std::vector<double> diffs;
    diffs.reserve(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - y[i];
        if (!std::isfinite(d)) throw Error("wilcoxon: non-finite difference");
        if (d != 0.0) diffs.push_back(d);
    }
    if (diffs.empty()) throw Error("wilcoxon: no nonzero differences");

    const std::vector<double> ranks = ranked_abs(diffs);
    double w_plus = 0.0;
    for (std::size_t i = 0; i < diffs.size(); ++i)
        if (diffs[i] > 0.0) w_plus += ranks[i];

    WilcoxonResult r;
    r.statistic = w_plus;
    r.n_effective = static_cast<std::int64_t>(diffs.size());
    r.exact = exact_cutoff > 0 && diffs.size() <= static_cast<std::size_t>(std::min(exact_cutoff, 25));
    r.p_two_sided = r.exact ? exact_two_sided_p(ranks, w_plus) : normal_two_sided_p(ranks, w_plus);
    return r;
}

double percentile_sorted(const std::vector<double>& sorted, double p) {
    if (sorted.empty()) throw Error("percentile of empty data");
    const double h = (p / 100.0) * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = h - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

double percentile(std::vector<double> values, double p) {
    std::sort(values.begin(), values.end());
    return percentile_sorted(values, p);
}

CohortSummary cohort_summary(const std::vector<double>& values) {
    if (values.empty()) throw Error("summary of empty data");
    CohortSummary s;
    s.n = static_cast<std::int64_t>(values.size());

    double sum = 0.0;
    for (double v : values) sum += v;
    s.mean = sum / static_cast<double>(s.n);

    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.stddev = s.n > 1 ? std::sqrt(ss / static_cast<double>(s.n - 1)) : 0.0;

    std::vector<double> sorted(values);
    std::sort(sorted.begin(), sorted.end());
    s.min = sorted.front();
    s.max = sorted.back();
    s.median = percentile_sorted(sorted, 50.0);
    return s;
}

SplitResult stratified_split(const std::vector<SubjectRecord>& records, double test_fraction,
                             int age_bin_years, std::uint64_t seed) {
    if (records.empty()) throw Error("split: empty cohort");
    if (!(test_fraction > 0.0 && test_fraction < 1.0))
        throw Error("split: test_fraction must be in (0, 1)");
    if (age_bin_years < 1) throw Error("split: age_bin_years must be >= 1");

    using StratumKey = std::pair<long, int>; // (age bin, sex)
    std::map<StratumKey, std::vector<std::size_t>> strata;
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (records[i].age < 0.0) throw Error("split: negative age for " + records[i].subject_id);
        const long bin = static_cast<long>(std::floor(records[i].age / age_bin_years));
        strata[{bin, records[i].sex == Sex::M ? 1 : 0}].push_back(i);
    }

    const auto n = static_cast<double>(records.size());
    const auto global_target = static_cast<std::int64_t>(std::llround(n * test_fraction));

    struct Quota {
        StratumKey key;
        std::size_t size;
        std::int64_t take;
        double remainder;
    };
    std::vector<Quota> quotas;
    std::int64_t assigned = 0;
    for (const auto& [key, members] : strata) {
        const double q = static_cast<double>(members.size()) * test_fraction;
        Quota quota{key, members.size(), static_cast<std::int64_t>(std::floor(q)),
                    q - std::floor(q)};
        assigned += quota.take;
        quotas.push_back(quota);
    }

    // Largest-remainder correction toward the global target (ties broken by
    // stratum key for determinism).
    std::vector<std::size_t> by_remainder(quotas.size());
    std::iota(by_remainder.begin(), by_remainder.end(), 0);
    std::sort(by_remainder.begin(), by_remainder.end(), [&](std::size_t a, std::size_t b) {
        if (quotas[a].remainder != quotas[b].remainder)
            return quotas[a].remainder > quotas[b].remainder;
        return quotas[a].key < quotas[b].key;
    });
    std::int64_t excess = global_target - assigned;
    for (std::size_t pass = 0; excess != 0 && pass < quotas.size() * 2 + 2; ++pass) {
        for (std::size_t idx : by_remainder) {
            if (excess > 0 && quotas[idx].take < static_cast<std::int64_t>(quotas[idx].size)) {
                ++quotas[idx].take;
                --excess;
            } else if (excess < 0 && quotas[idx].take > 0) {
                --quotas[idx].take;
                ++excess;
            }
            if (excess == 0) break;
        }
    }

    std::vector<bool> in_test(records.size(), false);
    for (const auto& quota : quotas) {
        auto members = strata[quota.key];
        const std::uint64_t key_hash =
            static_cast<std::uint64_t>(quota.key.first) * 2 +
            static_cast<std::uint64_t>(quota.key.second);
        rng::Xoshiro256pp gen(seed, rng::kStreamSplit + (key_hash << 8));
        // Partial Fisher-Yates: the first `take` entries become the sample.
        for (std::int64_t i = 0; i < quota.take; ++i) {
            const auto j = static_cast<std::size_t>(i) +
                           static_cast<std::size_t>(gen.below(members.size() - static_cast<std::size_t>(i)));
            std::swap(members[static_cast<std::size_t>(i)], members[j]);
            in_test[members[static_cast<std::size_t>(i)]] = true;
        }
    }

    SplitResult result;
    for (std::size_t i = 0; i < records.size(); ++i) {
        (in_test[i] ? result.test_ids : result.train_ids).push_back(records[i].subject_id);
    }
    return result;
}

std::vector<SubjectRecord> read_subject_manifest(const std::string& path) {
    const csv::Table table = csv::read_table(path);
    const std::size_t id_col = table.column("subject_id");
    const std::size_t age_col = table.column("age");
    const std::size_t sex_col = table.column("sex");
    const std::size_t site_col = table.find_column("site");

    std::vector<SubjectRecord> records;
    std::set<std::string> seen;
    for (const auto& row : table.rows) {
        SubjectRecord rec;
        rec.subject_id = row[id_col];
        if (rec.subject_id.empty()) throw Error("empty subject_id in " + path);
        if (!seen.insert(rec.subject_id).second)
            throw Error("duplicate subject_id '" + rec.subject_id + "' in " + path);
        rec.age = csv::parse_double(row[age_col], path);
        if (rec.age < 0.0) throw Error("negative age for '" + rec.subject_id + "' in " + path);
        const std::string& sex = row[sex_col];
        if (sex == "F")
            rec.sex = Sex::F;
        else if (sex == "M")
            rec.sex = Sex::M;
        else
            throw Error("invalid sex '" + sex + "' for '" + rec.subject_id + "' in " + path +
                        " (expected F or M)");
        if (site_col != csv::Table::npos) rec.site = row[site_col];
        records.push_back(std::move(rec));
    }
    return records;
}

} // namespace parcelqc
