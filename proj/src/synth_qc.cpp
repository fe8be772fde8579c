#include "parcelqc/synth_qc.hpp"

#include <array>
#include <set>

#include "parcelqc/csv.hpp"
#include "parcelqc/error.hpp"
#include "parcelqc/nifti.hpp"
#include "parcelqc/parallel.hpp"
#include "parcelqc/volume_ops.hpp"

namespace parcelqc {

std::vector<double> QcScoreSet::scores() const {
    std::vector<double> out;
    out.reserve(entries.size());
    for (const auto& e : entries) out.push_back(e.score);
    return out;
}

QcScoreSet BatchScores::ok_scores() const {
    QcScoreSet set;
    for (const auto& row : rows)
        if (row.score.has_value()) set.entries.push_back({row.subject_id, *row.score});
    return set;
}

std::size_t BatchScores::failure_count() const {
    std::size_t n = 0;
    for (const auto& row : rows) n += !row.score.has_value();
    return n;
}

Volume3D synthesize_reference(const Volume3D& flair, const LabelMap& seg, int filter_radius) {
    const std::vector<RegionStats> stats = region_medians(flair, seg);

    std::array<float, 65536> lut{}; // background and absent labels stay 0
    for (const auto& s : stats) lut[static_cast<std::size_t>(s.label)] =
        static_cast<float>(s.median_intensity);

    Volume3D substituted;
    substituted.geometry = flair.geometry;
    substituted.voxels.resize(flair.voxels.size());
    for (std::size_t i = 0; i < seg.labels.size(); ++i)
        substituted.voxels[i] = lut[seg.labels[i]];

    return box_filter(substituted, filter_radius);
}

double alignment_score(const Volume3D& flair, const LabelMap& seg, int filter_radius) {
    const Volume3D reference = synthesize_reference(flair, seg, filter_radius);
    return pearson_correlation(flair, reference, seg);
}

BatchScores batch_scores(const std::vector<CohortItem>& cohort, int filter_radius, int threads) {
    BatchScores result;
    result.rows.resize(cohort.size());
    parallel_for(cohort.size(), threads, [&](std::size_t i) {
        const CohortItem& item = cohort[i];
        BatchScores::Row row;
        row.subject_id = item.subject_id;
        try {
            const Volume3D flair = nifti::read_volume(item.flair_path);
            const LabelMap seg = nifti::read_labelmap(item.seg_path);
            row.score = alignment_score(flair, seg, filter_radius);
            row.status = "ok";
        } catch (const std::exception& e) {
            row.status = e.what();
        }
        result.rows[i] = std::move(row);
    });
    return result;
}

std::vector<CohortItem> read_cohort_manifest(const std::string& path) {
    const csv::Table table = csv::read_table(path);
    const std::size_t id_col = table.column("subject_id");
    const std::size_t flair_col = table.column("flair_path");
    const std::size_t seg_col = table.column("seg_path");

    std::vector<CohortItem> items;
    std::set<std::string> seen;
    for (const auto& row : table.rows) {
        CohortItem item{row[id_col], row[flair_col], row[seg_col]};
        if (item.subject_id.empty()) throw Error("empty subject_id in " + path);
        if (!seen.insert(item.subject_id).second)
            throw Error("duplicate subject_id '" + item.subject_id + "' in " + path);
        items.push_back(std::move(item));
    }
    return items;
}

void write_scores_csv(const std::string& path, const BatchScores& scores) {
    std::vector<std::vector<std::string>> rows;
    rows.reserve(scores.rows.size());
    for (const auto& row : scores.rows) {
        rows.push_back({row.subject_id,
                        row.score.has_value() ? csv::format_double(*row.score) : std::string(),
                        row.status});
    }
    csv::write_table(path, {"subject_id", "score", "status"}, rows);
}

QcScoreSet read_scores_csv(const std::string& path) {
    const csv::Table table = csv::read_table(path);
    const std::size_t id_col = table.column("subject_id");
    const std::size_t score_col = table.column("score");
    const std::size_t status_col = table.column("status");

    QcScoreSet set;
    std::set<std::string> seen;
    for (const auto& row : table.rows) {
        if (row[status_col] != "ok") continue;
        if (!seen.insert(row[id_col]).second)
            throw Error("duplicate subject_id '" + row[id_col] + "' in " + path);
        set.entries.push_back({row[id_col], csv::parse_double(row[score_col], path)});
    }
    return set;
}

} // namespace parcelqc
