#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "parcelqc/volume.hpp"

namespace parcelqc {

/// Per-(subject, label) evaluation record. `dice` is defined iff the label
/// appears in either map; `sd95_mm` iff it appears in both. Undefined values
/// stay explicit instead of being zero-filled.
struct StructureMetrics {
    std::string subject_id;
    int label = 0;
    std::optional<double> dice;
    std::optional<double> sd95_mm;
    std::int64_t gt_voxels = 0;
    std::int64_t pred_voxels = 0;
};

/// Label translation between segmentation protocols; unmapped labels become
/// background.
struct ProtocolMap {
    struct Entry {
        int source = 0;
        int target = 0;
        std::string name;
    };
    std::vector<Entry> entries;
};

/// Label -> structure-group assignment (each label in at most one group).
struct GroupMap {
    std::vector<std::pair<int, std::string>> entries;
};

struct GroupSummary {
    std::string group;
    std::optional<double> mean_dice;
    std::int64_t n_dice = 0;
    std::optional<double> mean_sd95_mm;
    std::int64_t n_sd95 = 0;
};

/// Dice overlap 2|A∩B| / (|A|+|B|) for one label; nullopt when the label is
/// absent from both maps. Throws on geometry mismatch.
std::optional<double> dice(const LabelMap& gt, const LabelMap& pred, int label);

/// Voxels of the region with at least one of six face-neighbors outside it
/// (out-of-grid counts as outside). Throws when the label is absent.
std::vector<std::array<int, 3>> boundary_voxels(const LabelMap& m, int label);

/// 95th percentile (linear interpolation) of the pooled symmetric
/// boundary-to-boundary nearest-neighbor distances in mm; nullopt when the
/// label is empty in either map.
std::optional<double> sd95(const LabelMap& gt, const LabelMap& pred, int label);

/// Applies the protocol map; any label without a mapping becomes 0.
LabelMap remap_protocol(const LabelMap& m, const ProtocolMap& pm);

/// One record per nonzero label present in either map, ascending label order.
std::vector<StructureMetrics> evaluate_pair(const LabelMap& gt, const LabelMap& pred,
                                            const std::string& subject_id = "",
                                            int threads = 1);

/// Unweighted means of the defined values per structure group; labels not in
/// the group map fall into "ungrouped".
std::vector<GroupSummary> aggregate_groups(const std::vector<StructureMetrics>& metrics,
                                           const GroupMap& gm);

/// TSV `source_label<TAB>target_label<TAB>name`, '#' comments. Source labels
/// must be unique.
ProtocolMap load_protocol_map(const std::string& path);

/// TSV `label<TAB>group`, '#' comments. Each label at most once.
GroupMap load_group_map(const std::string& path);

/// Metrics CSV `subject_id,label,dice,sd95_mm,gt_voxels,pred_voxels` with
/// empty cells for undefined values.
void write_metrics_csv(const std::string& path, const std::vector<StructureMetrics>& metrics);
std::vector<StructureMetrics> read_metrics_csv(const std::string& path);

void write_groups_csv(const std::string& path, const std::vector<GroupSummary>& groups);

} // namespace parcelqc
