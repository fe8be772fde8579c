#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "parcelqc/cohort_stats.hpp"
#include "parcelqc/csv.hpp"
#include "parcelqc/error.hpp"
#include "parcelqc/gmm.hpp"
#include "parcelqc/kernels.hpp"
#include "parcelqc/nifti.hpp"
#include "parcelqc/parallel.hpp"
#include "parcelqc/phantom.hpp"
#include "parcelqc/report.hpp"
#include "parcelqc/seg_metrics.hpp"
#include "parcelqc/synth_qc.hpp"
#include "parcelqc/volume_ops.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

constexpr const char* kVersion = "0.1.0";

constexpr int kExitOk = 0;
constexpr int kExitPartial = 1;
constexpr int kExitInvalid = 2;

struct OutputDir {
    fs::path dir;

    explicit OutputDir(const std::string& path) : dir(path) {
        std::error_code ec;
        fs::create_directories(dir, ec);
        if (ec) throw parcelqc::Error("cannot create output directory: " + path);
    }
    std::string file(const std::string& name) const { return (dir / name).string(); }
};

/// Run metadata lives in a sidecar so the data files stay byte-identical
/// across reruns.
void write_run_info(const OutputDir& out, const std::string& command,
                    const std::vector<std::string>& args) {
    ordered_json j;
    j["tool"] = "parcelqc";
    j["version"] = kVersion;
    j["command"] = command;
    j["arguments"] = args;
    j["simd"] = parcelqc::kernels::level_name(parcelqc::kernels::active_level());
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char stamp[32];
    std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    j["timestamp"] = stamp;

    std::ofstream f(out.file("run_info.json"), std::ios::binary | std::ios::trunc);
    f << j.dump(2) << "\n";
}

ordered_json summary_json(const parcelqc::CohortSummary& s) {
    ordered_json j;
    j["mean"] = s.mean;
    j["std"] = s.stddev;
    j["min"] = s.min;
    j["median"] = s.median;
    j["max"] = s.max;
    j["n"] = s.n;
    j["row"] = parcelqc::report::summary_row(s);
    return j;
}

void write_json_file(const std::string& path, const ordered_json& j) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw parcelqc::Error("cannot write file: " + path);
    f << j.dump(2) << "\n";
    f.flush();
    if (!f) throw parcelqc::Error("write failed: " + path);
}

// ---------------------------------------------------------------------------
// qc score

int run_qc_score(const std::string& manifest, int filter_radius, int threads,
                 const std::string& out_path, const std::vector<std::string>& args) {
    const auto cohort = parcelqc::read_cohort_manifest(manifest);
    const OutputDir out(out_path);
    const auto scores = parcelqc::batch_scores(cohort, filter_radius, threads);
    parcelqc::write_scores_csv(out.file("scores.csv"), scores);
    write_run_info(out, "qc score", args);

    for (const auto& row : scores.rows) {
        if (!row.score.has_value())
            std::cerr << "warning: " << row.subject_id << ": " << row.status << "\n";
    }
    std::cout << "scored " << scores.rows.size() - scores.failure_count() << "/"
              << scores.rows.size() << " subjects -> " << out.file("scores.csv") << "\n";
    if (scores.failure_count() == 0) return kExitOk;
    return scores.failure_count() == scores.rows.size() ? kExitInvalid : kExitPartial;
}

// ---------------------------------------------------------------------------
// qc fit

int run_qc_fit(const std::string& scores_path, double bin_width, double tol, int max_iter,
               std::uint64_t seed, const std::string& out_path,
               const std::vector<std::string>& args) {
    const parcelqc::QcScoreSet scores = parcelqc::read_scores_csv(scores_path);
    const parcelqc::GmmFit fit = parcelqc::fit_gmm2(scores, tol, max_iter, seed);

    const OutputDir out(out_path);
    parcelqc::report::write_fit_json(out.file("fit.json"), fit);
    parcelqc::report::write_histogram_csv(out.file("histogram.csv"),
                                          parcelqc::report::make_histogram(scores.scores(), bin_width));

    std::vector<std::vector<std::string>> rows;
    for (const auto& [id, pass] : parcelqc::classify_scores(scores, fit.threshold)) {
        rows.push_back({id, pass ? "1" : "0"});
    }
    parcelqc::csv::write_table(out.file("classified.csv"), {"subject_id", "pass"}, rows);
    write_run_info(out, "qc fit", args);

    std::cout << "threshold " << parcelqc::csv::format_double(fit.threshold) << " after "
              << fit.iterations << " iterations -> " << out.file("fit.json") << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// eval

struct EvalItem {
    std::string subject_id;
    std::string gt_path;
    std::string pred_path;
};

std::vector<EvalItem> read_eval_manifest(const std::string& path) {
    const parcelqc::csv::Table table = parcelqc::csv::read_table(path);
    const std::size_t id_col = table.column("subject_id");
    const std::size_t gt_col = table.column("gt_path");
    const std::size_t pred_col = table.column("pred_path");
    std::vector<EvalItem> items;
    std::set<std::string> seen;
    for (const auto& row : table.rows) {
        if (!seen.insert(row[id_col]).second)
            throw parcelqc::Error("duplicate subject_id '" + row[id_col] + "' in " + path);
        items.push_back({row[id_col], row[gt_col], row[pred_col]});
    }
    return items;
}

int run_eval(const std::vector<EvalItem>& items, const std::string& protocol_map_path,
             const std::string& pred_protocol_map_path, const std::string& group_map_path,
             int threads, const std::string& out_path, const std::vector<std::string>& args) {
    // Parse every referenced config before producing any output.
    std::optional<parcelqc::ProtocolMap> gt_map;
    std::optional<parcelqc::ProtocolMap> pred_map;
    if (!protocol_map_path.empty()) gt_map = parcelqc::load_protocol_map(protocol_map_path);
    if (!pred_protocol_map_path.empty())
        pred_map = parcelqc::load_protocol_map(pred_protocol_map_path);
    else if (gt_map.has_value())
        pred_map = gt_map;
    parcelqc::GroupMap group_map;
    if (!group_map_path.empty()) group_map = parcelqc::load_group_map(group_map_path);

    std::vector<parcelqc::StructureMetrics> all_metrics;
    struct SubjectRow {
        std::string subject_id;
        std::optional<double> mean_dice;
        std::optional<double> mean_sd95;
        std::int64_t n_labels = 0;
        std::string status;
    };
    std::vector<SubjectRow> subjects;
    std::size_t failures = 0;

    const OutputDir out(out_path);
    for (const auto& item : items) {
        SubjectRow row;
        row.subject_id = item.subject_id;
        try {
            parcelqc::LabelMap gt = parcelqc::nifti::read_labelmap(item.gt_path);
            parcelqc::LabelMap pred = parcelqc::nifti::read_labelmap(item.pred_path);
            if (gt_map.has_value()) gt = parcelqc::remap_protocol(gt, *gt_map);
            if (pred_map.has_value()) pred = parcelqc::remap_protocol(pred, *pred_map);

            const auto metrics = parcelqc::evaluate_pair(gt, pred, item.subject_id, threads);
            double dice_sum = 0.0, sd_sum = 0.0;
            std::int64_t n_dice = 0, n_sd = 0;
            for (const auto& m : metrics) {
                if (m.dice.has_value()) {
                    dice_sum += *m.dice;
                    ++n_dice;
                }
                if (m.sd95_mm.has_value()) {
                    sd_sum += *m.sd95_mm;
                    ++n_sd;
                }
            }
            row.n_labels = static_cast<std::int64_t>(metrics.size());
            if (n_dice > 0) row.mean_dice = dice_sum / static_cast<double>(n_dice);
            if (n_sd > 0) row.mean_sd95 = sd_sum / static_cast<double>(n_sd);
            row.status = "ok";
            all_metrics.insert(all_metrics.end(), metrics.begin(), metrics.end());
        } catch (const std::exception& e) {
            row.status = e.what();
            ++failures;
            std::cerr << "warning: " << item.subject_id << ": " << e.what() << "\n";
        }
        subjects.push_back(std::move(row));
    }

    parcelqc::write_metrics_csv(out.file("metrics.csv"), all_metrics);
    parcelqc::write_groups_csv(out.file("groups.csv"),
                               parcelqc::aggregate_groups(all_metrics, group_map));

    ordered_json j;
    j["n_subjects"] = subjects.size();
    j["n_failed"] = failures;
    std::vector<double> dice_means, sd_means;
    ordered_json per_subject = ordered_json::array();
    for (const auto& row : subjects) {
        ordered_json s;
        s["subject_id"] = row.subject_id;
        s["status"] = row.status;
        s["n_labels"] = row.n_labels;
        if (row.mean_dice.has_value()) {
            s["mean_dice"] = *row.mean_dice;
            dice_means.push_back(*row.mean_dice);
        }
        if (row.mean_sd95.has_value()) {
            s["mean_sd95_mm"] = *row.mean_sd95;
            sd_means.push_back(*row.mean_sd95);
        }
        per_subject.push_back(std::move(s));
    }
    if (!dice_means.empty()) j["dice"] = summary_json(parcelqc::cohort_summary(dice_means));
    if (!sd_means.empty()) j["sd95_mm"] = summary_json(parcelqc::cohort_summary(sd_means));
    j["per_subject"] = std::move(per_subject);
    write_json_file(out.file("summary.json"), j);
    write_run_info(out, "eval", args);

    if (!dice_means.empty())
        std::cout << "dice   " << parcelqc::report::summary_row(parcelqc::cohort_summary(dice_means))
                  << "\n";
    if (!sd_means.empty())
        std::cout << "sd95   " << parcelqc::report::summary_row(parcelqc::cohort_summary(sd_means))
                  << "\n";
    std::cout << "evaluated " << subjects.size() - failures << "/" << subjects.size()
              << " subjects -> " << out.file("metrics.csv") << "\n";
    if (failures == 0) return kExitOk;
    return failures == subjects.size() ? kExitInvalid : kExitPartial;
}

// ---------------------------------------------------------------------------
// compare

struct SubjectMeans {
    std::map<std::string, double> dice;
    std::map<std::string, double> sd95;
};

SubjectMeans per_subject_means(const std::vector<parcelqc::StructureMetrics>& metrics) {
    struct Acc {
        double sum = 0.0;
        std::int64_t n = 0;
    };
    std::map<std::string, Acc> dice_acc, sd_acc;
    for (const auto& m : metrics) {
        if (m.dice.has_value()) {
            dice_acc[m.subject_id].sum += *m.dice;
            ++dice_acc[m.subject_id].n;
        }
        if (m.sd95_mm.has_value()) {
            sd_acc[m.subject_id].sum += *m.sd95_mm;
            ++sd_acc[m.subject_id].n;
        }
    }
    SubjectMeans means;
    for (const auto& [id, acc] : dice_acc) means.dice[id] = acc.sum / static_cast<double>(acc.n);
    for (const auto& [id, acc] : sd_acc) means.sd95[id] = acc.sum / static_cast<double>(acc.n);
    return means;
}

ordered_json paired_test_json(const std::map<std::string, double>& a,
                              const std::map<std::string, double>& b) {
    std::vector<double> xs, ys;
    for (const auto& [id, va] : a) {
        const auto it = b.find(id);
        if (it != b.end()) {
            xs.push_back(va);
            ys.push_back(it->second);
        }
    }
    ordered_json j;
    j["n_pairs"] = xs.size();
    if (xs.empty()) {
        j["note"] = "no paired subjects";
        return j;
    }
    j["a"] = summary_json(parcelqc::cohort_summary(xs));
    j["b"] = summary_json(parcelqc::cohort_summary(ys));
    try {
        const parcelqc::WilcoxonResult w = parcelqc::wilcoxon_signed_rank(xs, ys);
        j["wilcoxon"] = {{"statistic", w.statistic},
                         {"p_two_sided", w.p_two_sided},
                         {"n_effective", w.n_effective},
                         {"mode", w.exact ? "exact" : "normal_approx"}};
    } catch (const parcelqc::Error& e) {
        j["wilcoxon"] = {{"p_two_sided", nullptr}, {"note", e.what()}};
    }
    return j;
}

int run_compare(const std::string& a_path, const std::string& b_path, const std::string& out_path,
                const std::vector<std::string>& args) {
    const auto metrics_a = parcelqc::read_metrics_csv(a_path);
    const auto metrics_b = parcelqc::read_metrics_csv(b_path);
    const SubjectMeans means_a = per_subject_means(metrics_a);
    const SubjectMeans means_b = per_subject_means(metrics_b);

    const OutputDir out(out_path);
    ordered_json j;
    j["a"] = a_path;
    j["b"] = b_path;
    j["dice"] = paired_test_json(means_a.dice, means_b.dice);
    j["sd95_mm"] = paired_test_json(means_a.sd95, means_b.sd95);
    write_json_file(out.file("report.json"), j);
    write_run_info(out, "compare", args);

    std::cout << "compared " << j["dice"]["n_pairs"].get<std::size_t>() << " paired subjects -> "
              << out.file("report.json") << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// split

int run_split(const std::string& subjects_path, double test_fraction, int age_bin,
              std::uint64_t seed, const std::string& out_path,
              const std::vector<std::string>& args) {
    const auto records = parcelqc::read_subject_manifest(subjects_path);
    const parcelqc::SplitResult split =
        parcelqc::stratified_split(records, test_fraction, age_bin, seed);

    const OutputDir out(out_path);
    auto write_ids = [](const std::string& path, const std::vector<std::string>& ids) {
        std::ofstream f(path, std::ios::binary | std::ios::trunc);
        if (!f) throw parcelqc::Error("cannot write file: " + path);
        for (const auto& id : ids) f << id << "\n";
    };
    write_ids(out.file("train_ids.txt"), split.train_ids);
    write_ids(out.file("test_ids.txt"), split.test_ids);
    write_run_info(out, "split", args);

    std::cout << "split " << records.size() << " subjects into " << split.train_ids.size()
              << " train / " << split.test_ids.size() << " test\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// phantom

int run_phantom(const std::string& spec_path, const std::vector<int>& shift, double rot_z,
                int lesions, int lesion_radius, double lesion_delta,
                const std::vector<int>& lesion_hosts, std::uint64_t lesion_seed,
                bool override_seed, std::uint64_t seed, int threads,
                const std::string& out_path, const std::vector<std::string>& args) {
    parcelqc::PhantomSpec spec = parcelqc::load_phantom_spec(spec_path);
    if (override_seed) spec.seed = seed;
    const OutputDir out(out_path);

    parcelqc::Phantom phantom = parcelqc::generate_phantom(spec, threads);

    if (lesions > 0) {
        std::vector<int> hosts = lesion_hosts;
        if (hosts.empty())
            for (int l = 1; l <= spec.n_parcels; ++l) hosts.push_back(l);
        phantom.flair = parcelqc::inject_lesions(phantom.flair, phantom.labels, hosts, lesions,
                                                 lesion_radius, lesion_delta, lesion_seed);
    }

    const bool misaligned = shift[0] != 0 || shift[1] != 0 || shift[2] != 0 || rot_z != 0.0;
    parcelqc::nifti::write_volume(phantom.flair, out.file("flair.nii.gz"));
    if (misaligned) {
        const parcelqc::LabelMap moved =
            parcelqc::inject_misalignment(phantom.labels, {shift[0], shift[1], shift[2]}, rot_z);
        parcelqc::nifti::write_volume(moved, out.file("labels.nii.gz"));
        parcelqc::nifti::write_volume(phantom.labels, out.file("labels_aligned.nii.gz"));
    } else {
        parcelqc::nifti::write_volume(phantom.labels, out.file("labels.nii.gz"));
    }
    write_run_info(out, "phantom", args);

    std::cout << "phantom " << spec.dims[0] << "x" << spec.dims[1] << "x" << spec.dims[2] << ", "
              << spec.n_parcels << " parcels -> " << out.file("flair.nii.gz") << "\n";
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);

    CLI::App app{"parcelqc: quality control and evaluation for fine-grained brain parcellations"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    int exit_code = kExitOk;

    // qc score / qc fit
    auto* qc = app.add_subcommand("qc", "Segmentation-alignment quality control");
    qc->require_subcommand(1);

    auto* score = qc->add_subcommand("score", "Score cohort alignment against synthetic references");
    struct {
        std::string manifest;
        int filter_radius = 1;
        int threads = parcelqc::default_thread_count();
        std::string out;
    } score_opts;
    score->add_option("--manifest", score_opts.manifest,
                      "Cohort CSV: subject_id,flair_path,seg_path")
        ->required()
        ->check(CLI::ExistingFile);
    score->add_option("--filter-radius", score_opts.filter_radius, "Box filter radius in voxels")
        ->check(CLI::NonNegativeNumber);
    score->add_option("--threads", score_opts.threads, "Worker threads");
    score->add_option("--out", score_opts.out, "Output directory")->required();
    score->callback([&] {
        exit_code = run_qc_score(score_opts.manifest, score_opts.filter_radius, score_opts.threads,
                                 score_opts.out, args);
    });

    auto* fit = qc->add_subcommand("fit", "Fit the score mixture and derive the rejection threshold");
    struct {
        std::string scores;
        double bin_width = parcelqc::report::kDefaultScoreBinWidth;
        double tol = 1e-8;
        int max_iter = 1000;
        std::uint64_t seed = 0;
        std::string out;
    } fit_opts;
    fit->add_option("--scores", fit_opts.scores, "Score CSV from `qc score`")
        ->required()
        ->check(CLI::ExistingFile);
    fit->add_option("--bin-width", fit_opts.bin_width, "Histogram bin width");
    fit->add_option("--tol", fit_opts.tol, "EM log-likelihood tolerance");
    fit->add_option("--max-iter", fit_opts.max_iter, "EM iteration cap");
    fit->add_option("--seed", fit_opts.seed, "Seed (reserved)");
    fit->add_option("--out", fit_opts.out, "Output directory")->required();
    fit->callback([&] {
        exit_code = run_qc_fit(fit_opts.scores, fit_opts.bin_width, fit_opts.tol,
                               fit_opts.max_iter, fit_opts.seed, fit_opts.out, args);
    });

    // eval
    auto* eval = app.add_subcommand("eval", "Per-structure Dice and SD95 against ground truth");
    struct {
        std::string gt, pred, subject_id = "subject", manifest;
        std::string protocol_map, pred_protocol_map, group_map;
        int threads = parcelqc::default_thread_count();
        std::string out;
    } eval_opts;
    eval->add_option("--gt", eval_opts.gt, "Ground-truth label map")->check(CLI::ExistingFile);
    eval->add_option("--pred", eval_opts.pred, "Predicted label map")->check(CLI::ExistingFile);
    eval->add_option("--subject-id", eval_opts.subject_id, "Subject id for single-pair mode");
    eval->add_option("--manifest", eval_opts.manifest,
                     "Cohort CSV: subject_id,gt_path,pred_path")
        ->check(CLI::ExistingFile);
    eval->add_option("--protocol-map", eval_opts.protocol_map,
                     "Label remap TSV applied to both maps")
        ->check(CLI::ExistingFile);
    eval->add_option("--pred-protocol-map", eval_opts.pred_protocol_map,
                     "Separate remap TSV for the predicted map")
        ->check(CLI::ExistingFile);
    eval->add_option("--group-map", eval_opts.group_map, "Structure-group TSV")
        ->check(CLI::ExistingFile);
    eval->add_option("--threads", eval_opts.threads, "Worker threads");
    eval->add_option("--out", eval_opts.out, "Output directory")->required();
    eval->callback([&] {
        std::vector<EvalItem> items;
        if (!eval_opts.manifest.empty()) {
            if (!eval_opts.gt.empty() || !eval_opts.pred.empty())
                throw CLI::ValidationError("eval", "--manifest excludes --gt/--pred");
            items = read_eval_manifest(eval_opts.manifest);
        } else {
            if (eval_opts.gt.empty() || eval_opts.pred.empty())
                throw CLI::ValidationError("eval", "need --gt and --pred, or --manifest");
            items.push_back({eval_opts.subject_id, eval_opts.gt, eval_opts.pred});
        }
        exit_code = run_eval(items, eval_opts.protocol_map, eval_opts.pred_protocol_map,
                             eval_opts.group_map, eval_opts.threads, eval_opts.out, args);
    });

    // compare
    auto* compare = app.add_subcommand("compare", "Paired Wilcoxon test between two metric files");
    struct {
        std::string a, b, out;
    } cmp_opts;
    compare->add_option("--a", cmp_opts.a, "First metrics CSV")->required()->check(CLI::ExistingFile);
    compare->add_option("--b", cmp_opts.b, "Second metrics CSV")->required()->check(CLI::ExistingFile);
    compare->add_option("--out", cmp_opts.out, "Output directory")->required();
    compare->callback([&] { exit_code = run_compare(cmp_opts.a, cmp_opts.b, cmp_opts.out, args); });

    // split
    auto* split = app.add_subcommand("split", "Stratified train/test split by age bin and sex");
    struct {
        std::string subjects;
        double test_fraction = 0.1;
        int age_bin = 10;
        std::uint64_t seed = 0;
        std::string out;
    } split_opts;
    split->add_option("--subjects", split_opts.subjects, "Subject CSV: subject_id,age,sex,site")
        ->required()
        ->check(CLI::ExistingFile);
    split->add_option("--test-fraction", split_opts.test_fraction, "Test fraction in (0,1)")
        ->required();
    split->add_option("--age-bin", split_opts.age_bin, "Age bin width in years");
    split->add_option("--seed", split_opts.seed, "Selection seed");
    split->add_option("--out", split_opts.out, "Output directory")->required();
    split->callback([&] {
        exit_code = run_split(split_opts.subjects, split_opts.test_fraction, split_opts.age_bin,
                              split_opts.seed, split_opts.out, args);
    });

    // phantom
    auto* phantom = app.add_subcommand("phantom", "Generate a synthetic parcellated test volume");
    struct {
        std::string spec;
        std::vector<int> shift{0, 0, 0};
        double rot_z = 0.0;
        int lesions = 0;
        int lesion_radius = 3;
        double lesion_delta = 60.0;
        std::vector<int> lesion_hosts;
        std::uint64_t lesion_seed = 0;
        std::uint64_t seed = 0;
        int threads = parcelqc::default_thread_count();
        std::string out;
    } ph_opts;
    phantom->add_option("--spec", ph_opts.spec, "Phantom spec JSON")
        ->required()
        ->check(CLI::ExistingFile);
    phantom->add_option("--shift", ph_opts.shift, "Label shift in voxels (x y z)")
        ->expected(3);
    phantom->add_option("--rot-z", ph_opts.rot_z, "Label rotation about z, degrees");
    phantom->add_option("--lesions", ph_opts.lesions, "Number of lesion blobs");
    phantom->add_option("--lesion-radius", ph_opts.lesion_radius, "Lesion radius in voxels");
    phantom->add_option("--lesion-delta", ph_opts.lesion_delta, "Lesion intensity increase");
    phantom->add_option("--lesion-host", ph_opts.lesion_hosts,
                        "Labels eligible to host lesions (default: all)");
    phantom->add_option("--lesion-seed", ph_opts.lesion_seed, "Lesion placement seed");
    auto* seed_opt =
        phantom->add_option("--seed", ph_opts.seed, "Overrides the seed in the spec JSON");
    phantom->add_option("--threads", ph_opts.threads, "Worker threads");
    phantom->add_option("--out", ph_opts.out, "Output directory")->required();
    phantom->callback([&] {
        exit_code = run_phantom(ph_opts.spec, ph_opts.shift, ph_opts.rot_z, ph_opts.lesions,
                                ph_opts.lesion_radius, ph_opts.lesion_delta, ph_opts.lesion_hosts,
                                ph_opts.lesion_seed, seed_opt->count() > 0, ph_opts.seed,
                                ph_opts.threads, ph_opts.out, args);
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e); // --help / --version
        app.exit(e);
        return kExitInvalid;
    } catch (const parcelqc::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInvalid;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInvalid;
    }
    return exit_code;
}
