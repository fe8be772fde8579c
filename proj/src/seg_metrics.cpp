#include "parcelqc/seg_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>

#include "parcelqc/cohort_stats.hpp"
#include "parcelqc/csv.hpp"
#include "parcelqc/error.hpp"
#include "parcelqc/kernels.hpp"
#include "parcelqc/parallel.hpp"

namespace parcelqc {

namespace {

constexpr std::size_t kLabelRange = 65536;

void require_same_geometry(const VolumeGeometry& a, const VolumeGeometry& b) {
    if (!geometry_match(a, b)) throw Error("geometry mismatch between label maps");
}

struct PointMm {
    double x, y, z;
    double operator[](int axis) const { return axis == 0 ? x : axis == 1 ? y : z; }
};

double dist2(const PointMm& a, const PointMm& b) {
    const double dx = a.x - b.x;
    const double dy = a.y - b.y;
    const double dz = a.z - b.z;
    return dx * dx + dy * dy + dz * dz;
}

// Median-split k-d tree over boundary points. Boundary sets run to ~1e5
// points at full resolution, far beyond what all-pairs search tolerates.
class KdTree3 {
public:
    explicit KdTree3(std::vector<PointMm> points) : pts_(std::move(points)), axis_(pts_.size(), 0) {
        build(0, pts_.size());
    }

    double nearest_dist2(const PointMm& q) const {
        double best = std::numeric_limits<double>::infinity();
        search(q, 0, pts_.size(), best);
        return best;
    }

private:
    static constexpr std::size_t kLeafSize = 12;

    void build(std::size_t lo, std::size_t hi) {
        if (hi - lo <= kLeafSize) return;
        int axis = 0;
        double best_extent = -1.0;
        for (int a = 0; a < 3; ++a) {
            auto [mn, mx] = std::minmax_element(
                pts_.begin() + static_cast<std::ptrdiff_t>(lo),
                pts_.begin() + static_cast<std::ptrdiff_t>(hi),
                [a](const PointMm& u, const PointMm& v) { return u[a] < v[a]; });
            const double extent = (*mx)[a] - (*mn)[a];
            if (extent > best_extent) {
                best_extent = extent;
                axis = a;
            }
        }
        const std::size_t mid = (lo + hi) / 2;
        std::nth_element(pts_.begin() + static_cast<std::ptrdiff_t>(lo),
                         pts_.begin() + static_cast<std::ptrdiff_t>(mid),
                         pts_.begin() + static_cast<std::ptrdiff_t>(hi),
                         [axis](const PointMm& u, const PointMm& v) { return u[axis] < v[axis]; });
        axis_[mid] = static_cast<std::int8_t>(axis);
        build(lo, mid);
        build(mid + 1, hi);
    }

    void search(const PointMm& q, std::size_t lo, std::size_t hi, double& best) const {
        if (hi - lo <= kLeafSize) {
            for (std::size_t i = lo; i < hi; ++i) best = std::min(best, dist2(q, pts_[i]));
            return;
        }
        const std::size_t mid = (lo + hi) / 2;
        const int axis = axis_[mid];
        best = std::min(best, dist2(q, pts_[mid]));
        const double delta = q[axis] - pts_[mid][axis];
        if (delta < 0.0) {
            search(q, lo, mid, best);
            if (delta * delta < best) search(q, mid + 1, hi, best);
        } else {
            search(q, mid + 1, hi, best);
            if (delta * delta < best) search(q, lo, mid, best);
        }
    }

    std::vector<PointMm> pts_;
    std::vector<std::int8_t> axis_;
};

std::vector<PointMm> to_mm(const std::vector<std::array<int, 3>>& voxels,
                           const std::array<double, 3>& spacing) {
    std::vector<PointMm> pts;
    pts.reserve(voxels.size());
    for (const auto& v : voxels)
        pts.push_back({v[0] * spacing[0], v[1] * spacing[1], v[2] * spacing[2]});
    return pts;
}

/// Boundary voxels of every nonzero label in one sweep.
std::vector<std::vector<std::array<int, 3>>> collect_boundaries(const LabelMap& m) {
    const int nx = m.geometry.dims[0];
    const int ny = m.geometry.dims[1];
    const int nz = m.geometry.dims[2];
    const std::size_t sx = 1;
    const std::size_t sy = static_cast<std::size_t>(nx);
    const std::size_t sz = static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny);

    std::vector<std::vector<std::array<int, 3>>> out(kLabelRange);
    const std::uint16_t* lab = m.labels.data();
    std::size_t i = 0;
    for (int z = 0; z < nz; ++z) {
        for (int y = 0; y < ny; ++y) {
            for (int x = 0; x < nx; ++x, ++i) {
                const std::uint16_t l = lab[i];
                if (l == 0) continue;
                const bool edge = (x == 0 || lab[i - sx] != l) || (x == nx - 1 || lab[i + sx] != l) ||
                                  (y == 0 || lab[i - sy] != l) || (y == ny - 1 || lab[i + sy] != l) ||
                                  (z == 0 || lab[i - sz] != l) || (z == nz - 1 || lab[i + sz] != l);
                if (edge) out[l].push_back({x, y, z});
            }
        }
    }
    return out;
}

std::optional<double> sd95_from_boundaries(const std::vector<std::array<int, 3>>& bnd_gt,
                                           const std::vector<std::array<int, 3>>& bnd_pred,
                                           const std::array<double, 3>& spacing) {
    if (bnd_gt.empty() || bnd_pred.empty()) return std::nullopt;
    const std::vector<PointMm> a = to_mm(bnd_gt, spacing);
    const std::vector<PointMm> b = to_mm(bnd_pred, spacing);

    std::vector<double> pooled;
    pooled.reserve(a.size() + b.size());
    {
        const KdTree3 tree_b(b);
        for (const auto& p : a) pooled.push_back(std::sqrt(tree_b.nearest_dist2(p)));
    }
    {
        const KdTree3 tree_a(a);
        for (const auto& p : b) pooled.push_back(std::sqrt(tree_a.nearest_dist2(p)));
    }
    std::sort(pooled.begin(), pooled.end());
    return percentile_sorted(pooled, 95.0);
}

/// Boundary of a single label; present reports whether the label occurs at
/// all (a present label always has a nonempty boundary on a finite grid).
std::vector<std::array<int, 3>> collect_label_boundary(const LabelMap& m, std::uint16_t l,
                                                       bool& present) {
    const int nx = m.geometry.dims[0];
    const int ny = m.geometry.dims[1];
    const int nz = m.geometry.dims[2];
    std::vector<std::array<int, 3>> out;
    present = false;
    for (int z = 0; z < nz; ++z) {
        for (int y = 0; y < ny; ++y) {
            for (int x = 0; x < nx; ++x) {
                if (m.at(x, y, z) != l) continue;
                present = true;
                const bool edge = (x == 0 || m.at(x - 1, y, z) != l) ||
                                  (x == nx - 1 || m.at(x + 1, y, z) != l) ||
                                  (y == 0 || m.at(x, y - 1, z) != l) ||
                                  (y == ny - 1 || m.at(x, y + 1, z) != l) ||
                                  (z == 0 || m.at(x, y, z - 1) != l) ||
                                  (z == nz - 1 || m.at(x, y, z + 1) != l);
                if (edge) out.push_back({x, y, z});
            }
        }
    }
    return out;
}

std::string optional_field(const std::optional<double>& v) {
    return v.has_value() ? csv::format_double(*v) : std::string();
}

std::vector<std::vector<std::string>> read_map_lines(const std::string& path,
                                                     std::size_t expected_fields) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open file: " + path);
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> fields;
        std::string::size_type start = 0;
        for (;;) {
            const auto pos = line.find('\t', start);
            if (pos == std::string::npos) {
                fields.push_back(line.substr(start));
                break;
            }
            fields.push_back(line.substr(start, pos - start));
            start = pos + 1;
        }
        if (fields.size() != expected_fields)
            throw Error("malformed line in " + path + ": expected " +
                        std::to_string(expected_fields) + " tab-separated fields");
        rows.push_back(std::move(fields));
    }
    return rows;
}

int parse_label(const std::string& text, const std::string& path) {
    const long long v = csv::parse_int(text, path);
    if (v < 0 || v >= static_cast<long long>(kLabelRange))
        throw Error("label " + text + " out of range in " + path);
    return static_cast<int>(v);
}

} // namespace

std::optional<double> dice(const LabelMap& gt, const LabelMap& pred, int label) {
    require_same_geometry(gt.geometry, pred.geometry);
    if (label < 0 || label >= static_cast<int>(kLabelRange)) return std::nullopt;
    const kernels::PairCounts c = kernels::count_label_pair(
        gt.labels.data(), pred.labels.data(), gt.labels.size(), static_cast<std::uint16_t>(label));
    if (c.in_gt + c.in_pred == 0) return std::nullopt;
    return 2.0 * static_cast<double>(c.in_both) / static_cast<double>(c.in_gt + c.in_pred);
}

std::vector<std::array<int, 3>> boundary_voxels(const LabelMap& m, int label) {
    if (label < 1 || label >= static_cast<int>(kLabelRange))
        throw Error("label " + std::to_string(label) + " out of range");
    bool present = false;
    auto out = collect_label_boundary(m, static_cast<std::uint16_t>(label), present);
    if (!present) throw Error("label " + std::to_string(label) + " absent from map");
    return out;
}

std::optional<double> sd95(const LabelMap& gt, const LabelMap& pred, int label) {
    require_same_geometry(gt.geometry, pred.geometry);
    if (label < 1 || label >= static_cast<int>(kLabelRange)) return std::nullopt;
    const auto l = static_cast<std::uint16_t>(label);
    bool present = false;
    const auto bnd_gt = collect_label_boundary(gt, l, present);
    const auto bnd_pred = collect_label_boundary(pred, l, present);
    return sd95_from_boundaries(bnd_gt, bnd_pred, gt.geometry.spacing);
}

LabelMap remap_protocol(const LabelMap& m, const ProtocolMap& pm) {
    std::vector<std::uint16_t> lut(kLabelRange, 0);
    for (const auto& e : pm.entries) {
        if (e.source < 0 || e.source >= static_cast<int>(kLabelRange) || e.target < 0 ||
            e.target >= static_cast<int>(kLabelRange))
            throw Error("protocol map label out of range");
        lut[static_cast<std::size_t>(e.source)] = static_cast<std::uint16_t>(e.target);
    }
    LabelMap out;
    out.geometry = m.geometry;
    out.labels.resize(m.labels.size());
    for (std::size_t i = 0; i < m.labels.size(); ++i) out.labels[i] = lut[m.labels[i]];
    return out;
}

std::vector<StructureMetrics> evaluate_pair(const LabelMap& gt, const LabelMap& pred,
                                            const std::string& subject_id, int threads) {
    require_same_geometry(gt.geometry, pred.geometry);
    const std::size_t n = gt.labels.size();

    // Voxel counts and same-label intersections in one pass; Dice for every
    // label needs nothing else.
    std::vector<std::int64_t> count_gt(kLabelRange, 0), count_pred(kLabelRange, 0),
        inter(kLabelRange, 0);
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint16_t g = gt.labels[i];
        const std::uint16_t p = pred.labels[i];
        ++count_gt[g];
        ++count_pred[p];
        if (g == p) ++inter[g];
    }

    std::vector<int> labels;
    for (std::size_t l = 1; l < kLabelRange; ++l)
        if (count_gt[l] > 0 || count_pred[l] > 0) labels.push_back(static_cast<int>(l));

    const auto bnd_gt = collect_boundaries(gt);
    const auto bnd_pred = collect_boundaries(pred);

    std::vector<StructureMetrics> metrics(labels.size());
    parallel_for(labels.size(), threads, [&](std::size_t k) {
        const int label = labels[k];
        const auto l = static_cast<std::size_t>(label);
        StructureMetrics m;
        m.subject_id = subject_id;
        m.label = label;
        m.gt_voxels = count_gt[l];
        m.pred_voxels = count_pred[l];
        m.dice = 2.0 * static_cast<double>(inter[l]) / static_cast<double>(count_gt[l] + count_pred[l]);
        m.sd95_mm = sd95_from_boundaries(bnd_gt[l], bnd_pred[l], gt.geometry.spacing);
        metrics[k] = std::move(m);
    });
    return metrics;
}

std::vector<GroupSummary> aggregate_groups(const std::vector<StructureMetrics>& metrics,
                                           const GroupMap& gm) {
    std::map<int, std::string> label_to_group;
    for (const auto& [label, group] : gm.entries) {
        if (!label_to_group.emplace(label, group).second)
            throw Error("label " + std::to_string(label) + " assigned to more than one group");
    }

    struct Acc {
        double dice_sum = 0.0;
        std::int64_t n_dice = 0;
        double sd_sum = 0.0;
        std::int64_t n_sd = 0;
    };
    std::map<std::string, Acc> acc;
    for (const auto& m : metrics) {
        const auto it = label_to_group.find(m.label);
        const std::string& group = it != label_to_group.end() ? it->second : std::string("ungrouped");
        Acc& a = acc[group];
        if (m.dice.has_value()) {
            a.dice_sum += *m.dice;
            ++a.n_dice;
        }
        if (m.sd95_mm.has_value()) {
            a.sd_sum += *m.sd95_mm;
            ++a.n_sd;
        }
    }

    std::vector<GroupSummary> out;
    for (const auto& [group, a] : acc) {
        if (group == "ungrouped") continue;
        GroupSummary s;
        s.group = group;
        s.n_dice = a.n_dice;
        s.n_sd95 = a.n_sd;
        if (a.n_dice > 0) s.mean_dice = a.dice_sum / static_cast<double>(a.n_dice);
        if (a.n_sd > 0) s.mean_sd95_mm = a.sd_sum / static_cast<double>(a.n_sd);
        out.push_back(std::move(s));
    }
    if (const auto it = acc.find("ungrouped"); it != acc.end()) {
        GroupSummary s;
        s.group = "ungrouped";
        s.n_dice = it->second.n_dice;
        s.n_sd95 = it->second.n_sd;
        if (s.n_dice > 0) s.mean_dice = it->second.dice_sum / static_cast<double>(s.n_dice);
        if (s.n_sd95 > 0) s.mean_sd95_mm = it->second.sd_sum / static_cast<double>(s.n_sd95);
        out.push_back(std::move(s));
    }
    return out;
}

ProtocolMap load_protocol_map(const std::string& path) {
    ProtocolMap pm;
    std::set<int> sources;
    for (const auto& fields : read_map_lines(path, 3)) {
        ProtocolMap::Entry e;
        e.source = parse_label(fields[0], path);
        e.target = parse_label(fields[1], path);
        e.name = fields[2];
        if (!sources.insert(e.source).second)
            throw Error("duplicate source label " + fields[0] + " in " + path);
        pm.entries.push_back(std::move(e));
    }
    return pm;
}

GroupMap load_group_map(const std::string& path) {
    GroupMap gm;
    std::set<int> labels;
    for (const auto& fields : read_map_lines(path, 2)) {
        const int label = parse_label(fields[0], path);
        if (fields[1].empty()) throw Error("empty group name in " + path);
        if (!labels.insert(label).second)
            throw Error("duplicate label " + fields[0] + " in " + path);
        gm.entries.emplace_back(label, fields[1]);
    }
    return gm;
}

void write_metrics_csv(const std::string& path, const std::vector<StructureMetrics>& metrics) {
    std::vector<std::vector<std::string>> rows;
    rows.reserve(metrics.size());
    for (const auto& m : metrics) {
        rows.push_back({m.subject_id, std::to_string(m.label), optional_field(m.dice),
                        optional_field(m.sd95_mm), std::to_string(m.gt_voxels),
                        std::to_string(m.pred_voxels)});
    }
    csv::write_table(path, {"subject_id", "label", "dice", "sd95_mm", "gt_voxels", "pred_voxels"},
                     rows);
}

std::vector<StructureMetrics> read_metrics_csv(const std::string& path) {
    const csv::Table table = csv::read_table(path);
    const std::size_t id_col = table.column("subject_id");
    const std::size_t label_col = table.column("label");
    const std::size_t dice_col = table.column("dice");
    const std::size_t sd_col = table.column("sd95_mm");
    const std::size_t gtv_col = table.column("gt_voxels");
    const std::size_t pv_col = table.column("pred_voxels");

    std::vector<StructureMetrics> metrics;
    for (const auto& row : table.rows) {
        StructureMetrics m;
        m.subject_id = row[id_col];
        m.label = static_cast<int>(csv::parse_int(row[label_col], path));
        if (!row[dice_col].empty()) m.dice = csv::parse_double(row[dice_col], path);
        if (!row[sd_col].empty()) m.sd95_mm = csv::parse_double(row[sd_col], path);
        m.gt_voxels = csv::parse_int(row[gtv_col], path);
        m.pred_voxels = csv::parse_int(row[pv_col], path);
        metrics.push_back(std::move(m));
    }
    return metrics;
}

void write_groups_csv(const std::string& path, const std::vector<GroupSummary>& groups) {
    std::vector<std::vector<std::string>> rows;
    rows.reserve(groups.size());
    for (const auto& g : groups) {
        rows.push_back({g.group, optional_field(g.mean_dice), std::to_string(g.n_dice),
                        optional_field(g.mean_sd95_mm), std::to_string(g.n_sd95)});
    }
    csv::write_table(path, {"group", "mean_dice", "n_dice", "mean_sd95_mm", "n_sd95"}, rows);
}

} // namespace parcelqc
