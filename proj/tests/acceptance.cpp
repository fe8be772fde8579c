// Acceptance suite: one pass/fail line per criterion, nonzero exit when any
// fails. Usage: parcelqc_acceptance <path-to-parcelqc-binary>

#include <sys/wait.h>

#include <array>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "oracles.hpp"
#include "parcelqc/cohort_stats.hpp"
#include "parcelqc/csv.hpp"
#include "parcelqc/gmm.hpp"
#include "parcelqc/nifti.hpp"
#include "parcelqc/phantom.hpp"
#include "parcelqc/report.hpp"
#include "parcelqc/rng.hpp"
#include "parcelqc/seg_metrics.hpp"
#include "parcelqc/synth_qc.hpp"
#include "parcelqc/volume_ops.hpp"

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

std::string g_cli;
fs::path g_work;
int g_failed = 0;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

void report(int number, const std::string& name, bool ok, const std::string& detail) {
    std::cout << (ok ? "[PASS]" : "[FAIL]") << " criterion " << number << " (" << name << "): "
              << detail << "\n";
    if (!ok) ++g_failed;
}

int run_cli(const std::string& args) {
    const std::string cmd =
        g_cli + " " + args + " >" + (g_work / "cli_out.txt").string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// --- 1: Dice/SD95 vs brute-force oracles on random small pairs --------------

void criterion1() {
    const auto start = Clock::now();
    std::mt19937 gen(20250810);
    long dice_checked = 0, sd95_checked = 0;
    double worst_sd95 = 0.0;
    bool ok = true;

    for (int pair = 0; pair < 200 && ok; ++pair) {
        std::uniform_int_distribution<int> dim_dist(6, 16);
        std::uniform_int_distribution<int> label_dist(1, 8);
        const int nx = dim_dist(gen), ny = dim_dist(gen), nz = dim_dist(gen);
        const int max_label = label_dist(gen);
        const auto g = parcelqc::VolumeGeometry::with_spacing({nx, ny, nz}, {1.0, 1.0, 1.0});

        std::uniform_int_distribution<int> value(0, max_label);
        parcelqc::LabelMap gt = parcelqc::LabelMap::zeros(g);
        parcelqc::LabelMap pred = parcelqc::LabelMap::zeros(g);
        for (auto& l : gt.labels) l = static_cast<std::uint16_t>(value(gen));
        for (auto& l : pred.labels) l = static_cast<std::uint16_t>(value(gen));

        for (const auto& m : parcelqc::evaluate_pair(gt, pred, "", 1)) {
            const auto od = oracles::dice_direct(gt, pred, m.label);
            if (!od.has_value() || !m.dice.has_value() || *m.dice != *od) {
                ok = false;
                break;
            }
            ++dice_checked;
            const auto os = oracles::sd95_allpairs(gt, pred, m.label);
            if (os.has_value() != m.sd95_mm.has_value()) {
                ok = false;
                break;
            }
            if (os.has_value()) {
                const double err = std::fabs(*m.sd95_mm - *os);
                worst_sd95 = std::max(worst_sd95, err);
                if (err > 1e-9) {
                    ok = false;
                    break;
                }
                ++sd95_checked;
            }
        }
    }
    const double elapsed = seconds_since(start);
    ok = ok && elapsed < 60.0;
    std::ostringstream detail;
    detail << "200 pairs, " << dice_checked << " dice exact, " << sd95_checked
           << " sd95 (worst err " << worst_sd95 << " mm), " << elapsed << " s (< 60 s)";
    report(1, "metric-oracle equivalence", ok, detail.str());
}

// --- 2: synthetic-reference faithfulness ------------------------------------

void criterion2() {
    parcelqc::PhantomSpec spec;
    spec.dims = {32, 36, 32};
    spec.semi_axes = {14.0, 16.0, 14.0};
    spec.n_parcels = 2;
    spec.noise_stddev = 0.0;
    spec.intensity_table = {{1, 10.0, 0.0}, {2, 50.0, 0.0}};
    spec.seed = 31;
    const parcelqc::Phantom ph = parcelqc::generate_phantom(spec);

    bool radius0_exact = true;
    const parcelqc::Volume3D synth0 = parcelqc::synthesize_reference(ph.flair, ph.labels, 0);
    for (std::size_t i = 0; i < synth0.voxels.size(); ++i) {
        const float expected =
            ph.labels.labels[i] == 0 ? 0.0f : (ph.labels.labels[i] == 1 ? 10.0f : 50.0f);
        if (synth0.voxels[i] != expected) {
            radius0_exact = false;
            break;
        }
    }

    // Direct-convolution oracle on the independently substituted image.
    parcelqc::Volume3D substituted = parcelqc::Volume3D::zeros(ph.flair.geometry);
    for (std::size_t i = 0; i < substituted.voxels.size(); ++i)
        substituted.voxels[i] =
            ph.labels.labels[i] == 0 ? 0.0f : (ph.labels.labels[i] == 1 ? 10.0f : 50.0f);
    const std::vector<double> direct = oracles::box_filter_direct(substituted, 1);
    const parcelqc::Volume3D synth1 = parcelqc::synthesize_reference(ph.flair, ph.labels, 1);
    double worst = 0.0;
    for (std::size_t i = 0; i < synth1.voxels.size(); ++i)
        worst = std::max(worst,
                         std::fabs(static_cast<double>(synth1.voxels[i]) -
                                   static_cast<double>(static_cast<float>(direct[i]))));

    const bool ok = radius0_exact && worst <= 1e-9;
    std::ostringstream detail;
    detail << "radius 0 exact medians: " << (radius0_exact ? "yes" : "NO")
           << "; radius 1 worst deviation vs direct convolution " << worst << " (<= 1e-9)";
    report(2, "QC-procedure faithfulness", ok, detail.str());
}

// --- 3: GMM recovery ---------------------------------------------------------

void criterion3() {
    const auto start = Clock::now();
    parcelqc::rng::Xoshiro256pp gen(424242, 0x99);
    std::vector<double> scores;
    scores.reserve(3577);
    for (int i = 0; i < 3577; ++i) {
        const bool low = gen.uniform01() < 0.10;
        scores.push_back(low ? 0.40 + 0.05 * gen.normal() : 0.80 + 0.03 * gen.normal());
    }
    const parcelqc::GmmFit fit = parcelqc::fit_gmm2(scores);
    const double elapsed = seconds_since(start);

    bool monotone = true;
    for (std::size_t i = 1; i < fit.ll_history.size(); ++i)
        monotone = monotone && fit.ll_history[i] >= fit.ll_history[i - 1] - 1e-9;

    const double want_threshold = 0.40 + 1.2815516 * 0.05;
    const bool ok = std::fabs(fit.mean[0] - 0.40) <= 0.01 &&
                    std::fabs(fit.mean[1] - 0.80) <= 0.01 &&
                    std::fabs(fit.weight[0] - 0.10) <= 0.02 &&
                    std::fabs(fit.weight[1] - 0.90) <= 0.02 &&
                    std::fabs(fit.threshold - want_threshold) <= 0.02 && monotone &&
                    elapsed < 5.0;
    std::ostringstream detail;
    detail << "mu = (" << fit.mean[0] << ", " << fit.mean[1] << "), phi = (" << fit.weight[0]
           << ", " << fit.weight[1] << "), threshold " << fit.threshold << " vs "
           << want_threshold << ", ll monotone: " << (monotone ? "yes" : "NO") << ", " << elapsed
           << " s (< 5 s)";
    report(3, "GMM recovery", ok, detail.str());
}

// --- 4: misalignment detectability -------------------------------------------

parcelqc::PhantomSpec detect_spec(std::uint64_t seed) {
    parcelqc::PhantomSpec spec;
    spec.dims = {64, 72, 64};
    spec.semi_axes = {26.0, 30.0, 26.0};
    spec.n_parcels = 64;
    spec.noise_stddev = 4.0;
    spec.seed = seed;
    return spec;
}

void criterion4() {
    const std::array<int, 5> shifts = {0, 1, 2, 4, 8};
    std::array<double, 5> mean_scores{};

    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const parcelqc::Phantom ph = parcelqc::generate_phantom(detect_spec(seed), 2);
        for (std::size_t s = 0; s < shifts.size(); ++s) {
            const parcelqc::LabelMap moved =
                shifts[s] == 0 ? ph.labels
                               : parcelqc::inject_misalignment(ph.labels, {shifts[s], 0, 0}, 0.0);
            mean_scores[s] += parcelqc::alignment_score(ph.flair, moved, 1) / 20.0;
        }
    }
    bool decreasing = true;
    for (std::size_t s = 1; s < shifts.size(); ++s)
        decreasing = decreasing && mean_scores[s] < mean_scores[s - 1];

    // Mixed cohort: 40 aligned + 10 shifted-by-8 subjects. Subjects share two
    // template anatomies (fine- and coarse-grained parcellations, like a
    // cohort registered to a common space) and differ by lesion load, so the
    // low-score component has substructure the threshold must clear.
    parcelqc::PhantomSpec fine_spec;
    fine_spec.dims = {96, 104, 96};
    fine_spec.semi_axes = {40.3, 43.7, 40.3};
    fine_spec.n_parcels = 1024;
    fine_spec.noise_stddev = 2.0;
    fine_spec.seed = 41;
    parcelqc::PhantomSpec coarse_spec = fine_spec;
    coarse_spec.n_parcels = 132;
    coarse_spec.seed = 42;

    const parcelqc::Phantom tmpl_fine = parcelqc::generate_phantom(fine_spec, 2);
    const parcelqc::Phantom tmpl_coarse = parcelqc::generate_phantom(coarse_spec, 2);
    const parcelqc::LabelMap moved_fine =
        parcelqc::inject_misalignment(tmpl_fine.labels, {8, 0, 0}, 0.0);
    const parcelqc::LabelMap moved_coarse =
        parcelqc::inject_misalignment(tmpl_coarse.labels, {8, 0, 0}, 0.0);

    parcelqc::QcScoreSet cohort;
    std::vector<bool> is_shifted;
    for (int i = 0; i < 50; ++i) {
        const bool coarse_subject = i % 5 == 4;
        const bool shifted = i >= 40;
        const parcelqc::Phantom& tmpl = coarse_subject ? tmpl_coarse : tmpl_fine;
        const parcelqc::Volume3D flair = parcelqc::inject_lesions(
            tmpl.flair, tmpl.labels, {1, 2, 3, 4, 5}, 3, 3, 40.0,
            static_cast<std::uint64_t>(7000 + i));
        const parcelqc::LabelMap& seg =
            shifted ? (coarse_subject ? moved_coarse : moved_fine) : tmpl.labels;
        cohort.entries.push_back(
            {"s" + std::to_string(i), parcelqc::alignment_score(flair, seg, 1)});
        is_shifted.push_back(shifted);
    }
    const parcelqc::GmmFit fit = parcelqc::fit_gmm2(cohort);
    const auto classes = parcelqc::classify_scores(cohort, fit.threshold);
    int shifted_rejected = 0, aligned_rejected = 0;
    for (std::size_t i = 0; i < classes.size(); ++i) {
        if (!classes[i].second) (is_shifted[i] ? shifted_rejected : aligned_rejected)++;
    }
    const double shifted_reject_rate = shifted_rejected / 10.0;
    const double aligned_reject_rate = aligned_rejected / 40.0;

    const bool ok = decreasing && shifted_reject_rate >= 0.90 && aligned_reject_rate <= 0.10;
    std::ostringstream detail;
    detail << "mean scores over shifts {0,1,2,4,8} = (";
    for (std::size_t s = 0; s < 5; ++s) detail << (s ? ", " : "") << mean_scores[s];
    detail << ") strictly decreasing: " << (decreasing ? "yes" : "NO") << "; rejected "
           << shifted_rejected << "/10 shifted, " << aligned_rejected << "/40 aligned";
    report(4, "misalignment detectability", ok, detail.str());
}

// --- 5: Wilcoxon correctness --------------------------------------------------

void criterion5() {
    const parcelqc::WilcoxonResult five =
        parcelqc::wilcoxon_signed_rank({1, 2, 3, 4, 5}, {0, 0, 0, 0, 0});
    const bool exact_ok = five.p_two_sided == 1.0 / 16.0;

    std::mt19937 gen(55);
    std::normal_distribution<double> noise(0.2, 1.0);
    double worst = 0.0;
    int trials = 0;
    for (int t = 0; t < 100; ++t) {
        std::vector<double> x(12), y(12);
        for (int i = 0; i < 12; ++i) {
            x[static_cast<std::size_t>(i)] = noise(gen);
            y[static_cast<std::size_t>(i)] = noise(gen);
        }
        const auto exact = parcelqc::wilcoxon_signed_rank(x, y);
        const auto approx = parcelqc::wilcoxon_signed_rank(x, y, 0);
        worst = std::max(worst, std::fabs(exact.p_two_sided - approx.p_two_sided));
        ++trials;
    }
    const bool ok = exact_ok && worst < 0.02 && trials == 100;
    std::ostringstream detail;
    detail << "n=5 all-positive p = " << five.p_two_sided << " (= 1/16: "
           << (exact_ok ? "yes" : "NO") << "); worst exact-vs-approx gap over 100 trials at n=12: "
           << worst << " (< 0.02)";
    report(5, "Wilcoxon correctness", ok, detail.str());
}

// --- 6: Table-2 format contract -------------------------------------------------

void criterion6() {
    // Synthetic per-subject means from the 0.90 +/- 0.02 family.
    std::vector<double> values;
    values.push_back(0.75);
    values.push_back(0.93);
    for (int i = 0; i < 50; ++i) values.push_back(0.91);
    for (int i = 0; i < 48; ++i) values.push_back(0.89);
    const std::string row = parcelqc::report::summary_row(parcelqc::cohort_summary(values));
    const bool row_ok = row == "0.90 ± 0.02 | 0.75 | 0.91 | 0.93";

    // The eval pipeline must emit the same layout.
    const fs::path dir = g_work / "crit6";
    fs::create_directories(dir);
    parcelqc::PhantomSpec spec;
    spec.dims = {24, 28, 24};
    spec.semi_axes = {10.0, 12.0, 10.0};
    spec.n_parcels = 8;
    spec.seed = 6;
    const parcelqc::Phantom ph = parcelqc::generate_phantom(spec);
    parcelqc::nifti::write_volume(ph.labels, (dir / "labels.nii.gz").string());
    const int rc = run_cli("eval --gt " + (dir / "labels.nii.gz").string() + " --pred " +
                           (dir / "labels.nii.gz").string() + " --out " + (dir / "out").string());
    bool cli_ok = rc == 0;
    std::string cli_row;
    if (cli_ok) {
        std::ifstream f((dir / "out" / "summary.json"));
        nlohmann::json j;
        f >> j;
        cli_row = j.at("dice").at("row").get<std::string>();
        cli_ok = cli_row == "1.00 ± 0.00 | 1.00 | 1.00 | 1.00";
    }

    report(6, "Table-2 format contract", row_ok && cli_ok,
           "crafted row \"" + row + "\"; eval summary row \"" + cli_row + "\"");
}

// --- 7: stratified-split balance -------------------------------------------------

void criterion7() {
    std::vector<parcelqc::SubjectRecord> records;
    for (int i = 0; i < 73; ++i)
        records.push_back({"f" + std::to_string(i), 41.9, parcelqc::Sex::F, ""});
    for (int i = 0; i < 27; ++i)
        records.push_back({"m" + std::to_string(i), 41.9, parcelqc::Sex::M, ""});

    const auto split = parcelqc::stratified_split(records, 0.10, 100, 12345);
    int f_test = 0, m_test = 0;
    for (const auto& id : split.test_ids) (id[0] == 'f' ? f_test : m_test)++;

    const auto again = parcelqc::stratified_split(records, 0.10, 100, 12345);
    const bool deterministic = again.test_ids == split.test_ids &&
                               again.train_ids == split.train_ids;

    const bool ok = f_test == 7 && m_test == 3 && deterministic;
    std::ostringstream detail;
    detail << "test split " << f_test << "F/" << m_test << "M (want 7F/3M); identical seeds "
           << (deterministic ? "reproduce the split" : "DIFFER");
    report(7, "stratified-split balance", ok, detail.str());
}

// --- 8: performance ------------------------------------------------------------

void criterion8() {
    // Full-resolution pair with 132 labels.
    parcelqc::PhantomSpec spec;
    spec.dims = {181, 217, 181};
    spec.semi_axes = {75.0, 90.0, 75.0};
    spec.n_parcels = 132;
    spec.noise_stddev = 0.0;
    spec.seed = 8;
    const parcelqc::Phantom ph = parcelqc::generate_phantom(spec, 2);
    const parcelqc::LabelMap pred = parcelqc::inject_misalignment(ph.labels, {1, 0, 0}, 0.0);

    auto t0 = Clock::now();
    const auto metrics1 = parcelqc::evaluate_pair(ph.labels, pred, "perf", 1);
    const double t_single = seconds_since(t0);

    t0 = Clock::now();
    const auto metrics8 = parcelqc::evaluate_pair(ph.labels, pred, "perf", 8);
    const double t_eight = seconds_since(t0);

    bool same = metrics1.size() == metrics8.size();
    for (std::size_t i = 0; same && i < metrics1.size(); ++i)
        same = metrics1[i].dice == metrics8[i].dice && metrics1[i].sd95_mm == metrics8[i].sd95_mm;

    // Cohort of 50 default phantoms scored through the CLI.
    const fs::path dir = g_work / "crit8";
    fs::create_directories(dir);
    std::ostringstream manifest;
    manifest << "subject_id,flair_path,seg_path\n";
    for (int s = 0; s < 50; ++s) {
        parcelqc::PhantomSpec cohort_spec; // defaults: 96x112x96, 132 parcels
        cohort_spec.noise_stddev = 4.0;
        cohort_spec.seed = static_cast<std::uint64_t>(1000 + s);
        const parcelqc::Phantom subject = parcelqc::generate_phantom(cohort_spec, 2);
        const std::string flair = (dir / ("f" + std::to_string(s) + ".nii.gz")).string();
        const std::string seg = (dir / ("s" + std::to_string(s) + ".nii.gz")).string();
        parcelqc::nifti::write_volume(subject.flair, flair);
        parcelqc::nifti::write_volume(subject.labels, seg);
        manifest << "p" << s << "," << flair << "," << seg << "\n";
    }
    std::ofstream((dir / "manifest.csv")) << manifest.str();

    t0 = Clock::now();
    const int rc = run_cli("qc score --manifest " + (dir / "manifest.csv").string() +
                           " --filter-radius 1 --out " + (dir / "scores").string());
    const double t_score = seconds_since(t0);

    const bool ok = t_single < 10.0 && t_eight < 3.0 && same && rc == 0 && t_score < 30.0;
    std::ostringstream detail;
    detail << "evaluate_pair 181x217x181/132 labels: " << t_single << " s single-thread (< 10 s), "
           << t_eight << " s at 8 threads (< 3 s), thread-invariant: " << (same ? "yes" : "NO")
           << "; qc score over 50 phantoms: " << t_score << " s (< 30 s)";
    report(8, "performance targets", ok, detail.str());
}

// --- 9: NIfTI round trip ---------------------------------------------------------

void criterion9() {
    const fs::path dir = g_work / "crit9";
    fs::create_directories(dir);
    bool ok = true;
    std::ostringstream detail;

    // Integer-valued data survives a pass through every supported on-disk
    // datatype; the writer then round-trips it as float32/uint16, plain and
    // gzipped.
    const auto g = parcelqc::VolumeGeometry::with_spacing({5, 4, 3}, {1.0, 0.5, 2.0});
    parcelqc::Volume3D v = parcelqc::Volume3D::zeros(g);
    for (std::size_t i = 0; i < v.voxels.size(); ++i)
        v.voxels[i] = static_cast<float>((i * 7) % 250);

    struct Case {
        const char* name;
        std::int16_t code;
        std::int16_t bitpix;
    };
    for (const Case& c : {Case{"uint8", 2, 8}, Case{"int16", 4, 16}, Case{"int32", 8, 32},
                          Case{"uint16", 512, 16}, Case{"float32", 16, 32},
                          Case{"float64", 64, 64}}) {
        // Raw file in the given datatype, assembled by offset.
        std::vector<unsigned char> bytes(352, 0);
        auto put = [&bytes](std::size_t off, auto value) {
            std::memcpy(bytes.data() + off, &value, sizeof(value));
        };
        put(0, std::int32_t{348});
        put(40, std::int16_t{3});
        put(42, std::int16_t{5});
        put(44, std::int16_t{4});
        put(46, std::int16_t{3});
        put(80, 1.0f);
        put(84, 0.5f);
        put(88, 2.0f);
        put(70, c.code);
        put(72, c.bitpix);
        put(108, 352.0f);
        std::memcpy(bytes.data() + 344, "n+1\0", 4);
        auto append = [&bytes](auto value) {
            const auto* p = reinterpret_cast<const unsigned char*>(&value);
            bytes.insert(bytes.end(), p, p + sizeof(value));
        };
        for (float x : v.voxels) {
            switch (c.code) {
                case 2: append(static_cast<std::uint8_t>(x)); break;
                case 4: append(static_cast<std::int16_t>(x)); break;
                case 8: append(static_cast<std::int32_t>(x)); break;
                case 512: append(static_cast<std::uint16_t>(x)); break;
                case 16: append(x); break;
                case 64: append(static_cast<double>(x)); break;
            }
        }
        const std::string raw_path = (dir / (std::string("raw_") + c.name + ".nii")).string();
        std::ofstream(raw_path, std::ios::binary)
            .write(reinterpret_cast<const char*>(bytes.data()),
                   static_cast<std::streamsize>(bytes.size()));

        const parcelqc::Volume3D decoded = parcelqc::nifti::read_volume(raw_path);
        bool val_ok = decoded.voxels == v.voxels && decoded.geometry.dims == g.dims &&
                      decoded.geometry.spacing == g.spacing;

        // write -> read identity, plain and gzip.
        for (const char* suffix : {".nii", ".nii.gz"}) {
            const std::string rt = (dir / (std::string("rt_") + c.name + suffix)).string();
            parcelqc::nifti::write_volume(decoded, rt);
            const parcelqc::Volume3D back = parcelqc::nifti::read_volume(rt);
            val_ok = val_ok && back.voxels == decoded.voxels &&
                     back.geometry.dims == decoded.geometry.dims &&
                     back.geometry.spacing == decoded.geometry.spacing;
        }
        if (!val_ok) {
            ok = false;
            detail << c.name << " FAILED; ";
        }
    }

    // Label map round trip, plain and gzip.
    parcelqc::LabelMap m = parcelqc::LabelMap::zeros(g);
    for (std::size_t i = 0; i < m.labels.size(); ++i)
        m.labels[i] = static_cast<std::uint16_t>((i * 13) % 133);
    for (const char* suffix : {".nii", ".nii.gz"}) {
        const std::string rt = (dir / (std::string("labels_rt") + suffix)).string();
        parcelqc::nifti::write_volume(m, rt);
        const parcelqc::LabelMap back = parcelqc::nifti::read_labelmap(rt);
        if (!(back.labels == m.labels && back.geometry.spacing == g.spacing)) {
            ok = false;
            detail << "labelmap" << suffix << " FAILED; ";
        }
    }

    if (ok) detail << "6 datatypes + label maps, plain and gzip, identity on voxels/dims/spacing";
    report(9, "NIfTI round trip", ok, detail.str());
}

} // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::cerr << "usage: parcelqc_acceptance <parcelqc binary>\n";
        return 2;
    }
    g_cli = argv[1];
    g_work = fs::temp_directory_path() / "parcelqc_acceptance";
    fs::remove_all(g_work);
    fs::create_directories(g_work);

    criterion1();
    criterion2();
    criterion3();
    criterion4();
    criterion5();
    criterion6();
    criterion7();
    criterion8();
    criterion9();

    std::cout << (g_failed == 0 ? "ACCEPTANCE: ALL CRITERIA PASSED\n"
                                : "ACCEPTANCE: " + std::to_string(g_failed) + " CRITERIA FAILED\n");
    return g_failed == 0 ? 0 : 1;
}
