#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "oracles.hpp"
#include "parcelqc/error.hpp"
#include "parcelqc/nifti.hpp"
#include "parcelqc/phantom.hpp"
#include "parcelqc/synth_qc.hpp"
#include "parcelqc/volume_ops.hpp"
#include "test_support.hpp"

using namespace parcelqc;
namespace fs = std::filesystem;
using test_support::geom;

namespace {

/// Two-region grid: left half label 1 around intensity 10, right half label 2
/// around intensity 50, with a deterministic jitter pattern.
struct TwoLabelPhantom {
    Volume3D flair;
    LabelMap seg;
    double median1, median2;
};

TwoLabelPhantom make_two_label(int n = 8) {
    TwoLabelPhantom p;
    auto g = geom(n, n, n);
    p.flair = Volume3D::zeros(g);
    p.seg = LabelMap::zeros(g);
    std::vector<double> v1, v2;
    for (int z = 0; z < n; ++z)
        for (int y = 0; y < n; ++y)
            for (int x = 0; x < n; ++x) {
                const bool left = x < n / 2;
                const float jitter = 0.25f * static_cast<float>((x + 2 * y + 3 * z) % 5 - 2);
                const float value = (left ? 10.0f : 50.0f) + jitter;
                p.flair.at(x, y, z) = value;
                p.seg.at(x, y, z) = left ? 1 : 2;
                (left ? v1 : v2).push_back(value);
            }
    p.median1 = oracles::median_by_sort(v1);
    p.median2 = oracles::median_by_sort(v2);
    return p;
}

} // namespace

TEST_CASE("synthesize_reference: single label + constant image reproduces the constant") {
    auto g = geom(4, 4, 4);
    auto flair = Volume3D::zeros(g);
    std::fill(flair.voxels.begin(), flair.voxels.end(), 42.5f);
    auto seg = LabelMap::zeros(g);
    std::fill(seg.labels.begin(), seg.labels.end(), std::uint16_t{9});

    for (int radius : {0, 1, 2}) {
        const Volume3D synth = synthesize_reference(flair, seg, radius);
        for (float v : synth.voxels) CHECK(v == 42.5f);
    }
}

TEST_CASE("synthesize_reference at radius 0 is the exact per-label median image") {
    const auto p = make_two_label();
    const Volume3D synth = synthesize_reference(p.flair, p.seg, 0);
    for (std::size_t i = 0; i < synth.voxels.size(); ++i) {
        const double want = p.seg.labels[i] == 1 ? p.median1 : p.median2;
        CHECK(synth.voxels[i] == static_cast<float>(want));
    }
}

TEST_CASE("synthesize_reference at radius 1 matches the direct-convolution oracle") {
    const auto p = make_two_label();

    // The oracle runs on the independently substituted image.
    Volume3D substituted = Volume3D::zeros(p.flair.geometry);
    for (std::size_t i = 0; i < substituted.voxels.size(); ++i)
        substituted.voxels[i] =
            static_cast<float>(p.seg.labels[i] == 1 ? p.median1 : p.median2);
    const std::vector<double> want = oracles::box_filter_direct(substituted, 1);

    // Substituted values are quarter-integers, so both accumulation paths
    // are exact in double and the float32 casts must agree bit-for-bit.
    const Volume3D synth = synthesize_reference(p.flair, p.seg, 1);
    for (std::size_t i = 0; i < synth.voxels.size(); ++i)
        CHECK(synth.voxels[i] == static_cast<float>(want[i]));

    // Blending happens only within one voxel of the label boundary.
    const int n = p.flair.geometry.dims[0];
    for (int z = 0; z < n; ++z)
        for (int y = 0; y < n; ++y)
            for (int x = 0; x < n; ++x) {
                if (std::abs(x - (n / 2 - 1)) <= 1 || std::abs(x - n / 2) <= 1) continue;
                const double pure = p.seg.at(x, y, z) == 1 ? p.median1 : p.median2;
                CHECK(synth.at(x, y, z) == static_cast<float>(pure));
            }
}

TEST_CASE("synthesize_reference at radius 0 takes at most L+1 distinct values") {
    PhantomSpec sp;
    sp.dims = {24, 24, 24};
    sp.semi_axes = {10.0, 10.0, 10.0};
    sp.noise_stddev = 3.0;
    sp.seed = 5;
    sp.n_parcels = 7;
    const Phantom ph = generate_phantom(sp);
    const Volume3D synth = synthesize_reference(ph.flair, ph.labels, 0);
    std::set<float> distinct(synth.voxels.begin(), synth.voxels.end());
    CHECK(distinct.size() <= 8);
}

TEST_CASE("alignment_score: piecewise-constant phantom scores exactly 1 at radius 0") {
    auto g = geom(6, 6, 6);
    auto flair = Volume3D::zeros(g);
    auto seg = LabelMap::zeros(g);
    for (int z = 0; z < 6; ++z)
        for (int y = 0; y < 6; ++y)
            for (int x = 0; x < 6; ++x) {
                seg.at(x, y, z) = x < 3 ? 1 : 2;
                flair.at(x, y, z) = x < 3 ? 10.0f : 50.0f;
            }
    CHECK(alignment_score(flair, seg, 0) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("alignment_score is invariant under positive affine intensity rescaling") {
    PhantomSpec spec;
    spec.dims = {24, 28, 24};
    spec.semi_axes = {10.0, 12.0, 10.0};
    spec.n_parcels = 12;
    spec.noise_stddev = 2.0;
    spec.seed = 11;
    const Phantom ph = generate_phantom(spec);

    SUBCASE("any affine map at radius 0") {
        // Quarter-integer data keeps the float map exact.
        const auto p = make_two_label(10);
        const double base = alignment_score(p.flair, p.seg, 0);
        Volume3D mapped = p.flair;
        for (auto& v : mapped.voxels) v = 2.0f * v + 7.25f;
        CHECK(alignment_score(mapped, p.seg, 0) == doctest::Approx(base).epsilon(1e-9));
    }
    SUBCASE("pure positive scaling at radius 1") {
        // With filtering, an intensity *offset* is not preserved: the
        // synthetic background stays at 0 and blends into mask-edge voxels,
        // so only the scaling part of the map commutes with the pipeline.
        const double base = alignment_score(ph.flair, ph.labels, 1);
        Volume3D scaled = ph.flair;
        for (auto& v : scaled.voxels) v = 4.0f * v;
        CHECK(alignment_score(scaled, ph.labels, 1) == doctest::Approx(base).epsilon(1e-9));
    }
}

TEST_CASE("alignment_score drops under an 8-voxel shift, averaged over seeds") {
    double sum_aligned = 0.0, sum_shifted = 0.0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        PhantomSpec spec;
        spec.dims = {32, 36, 32};
        spec.semi_axes = {14.0, 16.0, 14.0};
        spec.n_parcels = 20;
        spec.noise_stddev = 2.0;
        spec.seed = seed;
        const Phantom ph = generate_phantom(spec);
        const LabelMap shifted = inject_misalignment(ph.labels, {8, 0, 0}, 0.0);
        sum_aligned += alignment_score(ph.flair, ph.labels, 1);
        sum_shifted += alignment_score(ph.flair, shifted, 1);
    }
    CHECK(sum_shifted < sum_aligned);
}

TEST_CASE("alignment_score propagates geometry mismatch") {
    const auto flair = test_support::random_volume(geom(4, 4, 4), 3);
    auto seg = LabelMap::zeros(geom(4, 4, 3));
    std::fill(seg.labels.begin(), seg.labels.end(), std::uint16_t{1});
    CHECK_THROWS_WITH_AS(alignment_score(flair, seg, 1), doctest::Contains("geometry"), Error);
}

TEST_CASE("batch_scores: order, partial failure, empty cohort") {
    const fs::path dir = fs::temp_directory_path() / "parcelqc_batch_test";
    fs::create_directories(dir);

    PhantomSpec spec;
    spec.dims = {16, 16, 16};
    spec.semi_axes = {7.0, 7.0, 7.0};
    spec.n_parcels = 5;
    spec.noise_stddev = 1.0;

    std::vector<CohortItem> cohort;
    for (int s = 0; s < 3; ++s) {
        spec.seed = static_cast<std::uint64_t>(s);
        const Phantom ph = generate_phantom(spec);
        const std::string flair = (dir / ("f" + std::to_string(s) + ".nii.gz")).string();
        const std::string seg = (dir / ("s" + std::to_string(s) + ".nii.gz")).string();
        nifti::write_volume(ph.flair, flair);
        nifti::write_volume(ph.labels, seg);
        cohort.push_back({"subj" + std::to_string(s), flair, seg});
    }

    SUBCASE("all valid: one score per subject in input order") {
        const BatchScores result = batch_scores(cohort, 1, 2);
        REQUIRE(result.rows.size() == 3);
        for (int s = 0; s < 3; ++s) {
            CHECK(result.rows[static_cast<std::size_t>(s)].subject_id == "subj" + std::to_string(s));
            CHECK(result.rows[static_cast<std::size_t>(s)].score.has_value());
            CHECK(result.rows[static_cast<std::size_t>(s)].status == "ok");
        }
        CHECK(result.failure_count() == 0);
        CHECK(result.ok_scores().entries.size() == 3);
    }

    SUBCASE("one unreadable file: two scores plus an error record") {
        auto broken = cohort;
        broken[1].flair_path = (dir / "missing.nii.gz").string();
        const BatchScores result = batch_scores(broken, 1, 2);
        REQUIRE(result.rows.size() == 3);
        CHECK(result.rows[0].score.has_value());
        CHECK_FALSE(result.rows[1].score.has_value());
        CHECK(result.rows[1].status != "ok");
        CHECK(result.rows[2].score.has_value());
        CHECK(result.failure_count() == 1);
        CHECK(result.ok_scores().entries.size() == 2);
    }

    SUBCASE("empty cohort gives an empty score set") {
        const BatchScores result = batch_scores({}, 1, 2);
        CHECK(result.rows.empty());
        CHECK(result.ok_scores().entries.empty());
    }

    SUBCASE("scores CSV round-trips ok rows") {
        auto broken = cohort;
        broken[2].seg_path = (dir / "missing.nii.gz").string();
        const BatchScores result = batch_scores(broken, 1, 1);
        const std::string csv_path = (dir / "scores.csv").string();
        write_scores_csv(csv_path, result);
        const QcScoreSet set = read_scores_csv(csv_path);
        REQUIRE(set.entries.size() == 2);
        CHECK(set.entries[0].subject_id == "subj0");
        CHECK(set.entries[0].score == *result.rows[0].score);
        CHECK(set.entries[1].subject_id == "subj1");
    }
}

TEST_CASE("cohort manifest rejects duplicate ids") {
    const fs::path dir = fs::temp_directory_path() / "parcelqc_batch_test";
    fs::create_directories(dir);
    const std::string path = (dir / "manifest_dup.csv").string();
    {
        std::ofstream f(path);
        f << "subject_id,flair_path,seg_path\na,f.nii,s.nii\na,f2.nii,s2.nii\n";
    }
    CHECK_THROWS_WITH_AS(read_cohort_manifest(path), doctest::Contains("duplicate"), Error);
}
