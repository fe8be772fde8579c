#pragma once

#include <optional>
#include <string>
#include <vector>

#include "parcelqc/volume.hpp"

namespace parcelqc {

/// Ordered per-subject correlation scores; subject ids are unique.
struct QcScoreSet {
    struct Entry {
        std::string subject_id;
        double score = 0.0;
    };
    std::vector<Entry> entries;

    std::vector<double> scores() const;
};

struct CohortItem {
    std::string subject_id;
    std::string flair_path;
    std::string seg_path;
};

/// One row per manifest subject, in manifest order. A failed subject keeps
/// its row with the error message in `status` and no score.
struct BatchScores {
    struct Row {
        std::string subject_id;
        std::optional<double> score;
        std::string status; // "ok" or the error message
    };
    std::vector<Row> rows;

    QcScoreSet ok_scores() const;
    std::size_t failure_count() const;
};

/// Builds the synthetic reference for alignment checking: every voxel of each
/// labeled structure is replaced by that structure's median intensity,
/// unlabeled voxels become 0, and the result is box-filtered with
/// filter_radius to mimic partial volume averaging.
Volume3D synthesize_reference(const Volume3D& flair, const LabelMap& seg, int filter_radius);

/// Correlation between the image and its synthetic reference over the labeled
/// voxels (seg > 0). Higher means better spatial alignment.
double alignment_score(const Volume3D& flair, const LabelMap& seg, int filter_radius);

/// Scores a whole cohort, evaluating subjects in parallel; output order is
/// the input order and per-subject failures never abort the batch.
BatchScores batch_scores(const std::vector<CohortItem>& cohort, int filter_radius, int threads);

/// Manifest CSV with header subject_id,flair_path,seg_path. Ids must be
/// unique.
std::vector<CohortItem> read_cohort_manifest(const std::string& path);

/// Score CSV with header subject_id,score,status.
void write_scores_csv(const std::string& path, const BatchScores& scores);

/// Reads back a score CSV, keeping only rows with status "ok".
QcScoreSet read_scores_csv(const std::string& path);

} // namespace parcelqc
