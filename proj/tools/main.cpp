// SPDX-License-Identifier: Apache-2.0
//
// kenforge command-line front end. Talks to the core exclusively through
// the C API in kenforge.h.
//
// Exit codes: 0 success, 2 input/validation error, 3 evaluator failure,
// 4 output I/O failure, 1 internal error.
#include "kenforge.h"

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

namespace {

bool g_quiet = false;
bool g_verbose = false;

void log_info(const std::string& message) {
    if (!g_quiet) {
        std::cerr << "[kenforge] " << message << "\n";
    }
}

void log_debug(const std::string& message) {
    if (g_verbose && !g_quiet) {
        std::cerr << "[kenforge] " << message << "\n";
    }
}

[[noreturn]] void fail(kf_status status) {
    std::cerr << "kenforge: error: " << kf_last_error() << "\n";
    std::exit(status == KF_STATUS_OK ? KF_STATUS_INTERNAL : status);
}

void check(kf_status status) {
    if (status != KF_STATUS_OK) {
        fail(status);
    }
}

using CheckpointPtr = std::unique_ptr<kf_checkpoint, decltype(&kf_checkpoint_free)>;
using MasksetPtr = std::unique_ptr<kf_maskset, decltype(&kf_maskset_free)>;
using EvaluatorPtr = std::unique_ptr<kf_evaluator, decltype(&kf_evaluator_free)>;

struct OwnedString {
    char* s = nullptr;
    ~OwnedString() { kf_string_free(s); }
    std::string str() const { return s ? s : ""; }
};

CheckpointPtr read_checkpoint(const std::string& path) {
    kf_checkpoint* ckpt = nullptr;
    check(kf_checkpoint_read(path.c_str(), &ckpt));
    log_debug("read checkpoint " + path + " (" +
              std::to_string(kf_checkpoint_tensor_count(ckpt)) + " tensors)");
    return CheckpointPtr(ckpt, &kf_checkpoint_free);
}

MasksetPtr read_maskset(const std::string& path) {
    kf_maskset* masks = nullptr;
    check(kf_maskset_read(path.c_str(), &masks));
    log_debug("read mask set " + path + " (k=" + std::to_string(kf_maskset_k(masks)) + ", " +
              std::to_string(kf_maskset_tensor_count(masks)) + " tensors)");
    return MasksetPtr(masks, &kf_maskset_free);
}

std::vector<const char*> c_strings(const std::vector<std::string>& strings) {
    std::vector<const char*> out;
    out.reserve(strings.size());
    for (const std::string& s : strings) {
        out.push_back(s.c_str());
    }
    return out;
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out.is_open()) {
        std::cerr << "kenforge: error: cannot open file for writing: " << path << "\n";
        std::exit(KF_STATUS_IO);
    }
    out << text;
    out.flush();
    if (!out) {
        std::cerr << "kenforge: error: write failed: " << path << "\n";
        std::exit(KF_STATUS_IO);
    }
}

// KDE options shared by prune and sweep.
struct KdeFlags {
    std::string bandwidth = "scott";
    double fixed_h = 0.0;
    double degenerate = 1e-9;
    CLI::Option* fixed_h_opt = nullptr;

    void attach(CLI::App* cmd) {
        cmd->add_option("--bandwidth", bandwidth, "Bandwidth rule: scott, silverman or fixed")
            ->check(CLI::IsMember({"scott", "silverman", "fixed"}))
            ->capture_default_str();
        fixed_h_opt = cmd->add_option("--fixed-h", fixed_h,
                                      "Bandwidth value for --bandwidth fixed (> 0)");
        cmd->add_option("--degenerate-bandwidth", degenerate,
                        "Fallback bandwidth for constant rows")
            ->capture_default_str();
    }

    kf_kde_config resolve(CLI::App* cmd) const {
        kf_kde_config config;
        kf_kde_config_default(&config);
        config.degenerate_bandwidth = degenerate;
        if (bandwidth == "fixed") {
            if (fixed_h_opt->count() == 0) {
                std::cerr << cmd->get_name() << ": --bandwidth fixed requires --fixed-h\n";
                std::exit(KF_STATUS_INPUT);
            }
            config.bandwidth_rule = KF_BANDWIDTH_FIXED;
            config.fixed_h = fixed_h;
        } else {
            if (fixed_h_opt->count() > 0) {
                std::cerr << cmd->get_name() << ": --fixed-h needs --bandwidth fixed\n";
                std::exit(KF_STATUS_INPUT);
            }
            config.bandwidth_rule =
                bandwidth == "silverman" ? KF_BANDWIDTH_SILVERMAN : KF_BANDWIDTH_SCOTT;
        }
        return config;
    }
};

// Tensor selection for prune/sweep: explicit list, regex against the
// fine-tuned checkpoint's names, or (default) every tensor that differs
// between the two checkpoints.
std::vector<std::string> resolve_prunable(const kf_checkpoint* pre, const kf_checkpoint* fine,
                                          const std::vector<std::string>& names,
                                          const std::string& regex) {
    if (!names.empty()) {
        return names;
    }
    if (!regex.empty()) {
        std::regex re;
        try {
            re = std::regex(regex);
        } catch (const std::regex_error& e) {
            std::cerr << "kenforge: error: invalid tensor regex '" << regex << "': " << e.what()
                      << "\n";
            std::exit(KF_STATUS_INPUT);
        }
        std::vector<std::string> matched;
        const uint64_t count = kf_checkpoint_tensor_count(fine);
        for (uint64_t i = 0; i < count; ++i) {
            const char* name = kf_checkpoint_tensor_name(fine, i);
            if (name != nullptr && std::regex_search(name, re)) {
                matched.emplace_back(name);
            }
        }
        if (matched.empty()) {
            std::cerr << "kenforge: error: tensor regex '" << regex
                      << "' matches no tensors in the fine-tuned checkpoint\n";
            std::exit(KF_STATUS_INPUT);
        }
        return matched;
    }
    // no selection given: prune whatever fine-tuning changed
    char** diff_names = nullptr;
    uint64_t diff_count = 0;
    check(kf_checkpoint_diff(pre, fine, &diff_names, &diff_count));
    std::vector<std::string> changed;
    changed.reserve(diff_count);
    for (uint64_t i = 0; i < diff_count; ++i) {
        changed.emplace_back(diff_names[i]);
    }
    kf_string_array_free(diff_names, diff_count);
    if (changed.empty()) {
        std::cerr << "kenforge: error: checkpoints are identical; nothing to prune "
                     "(pass --tensors or --tensors-regex to force a selection)\n";
        std::exit(KF_STATUS_INPUT);
    }
    log_info("auto-selected " + std::to_string(changed.size()) +
             " changed tensor(s) as prunable");
    return changed;
}

std::string default_mask_label(const kf_maskset* masks, const std::string& path) {
    const char* variant = kf_maskset_meta_get(masks, "variant");
    if (variant != nullptr && variant[0] != '\0') {
        return variant;
    }
    return std::filesystem::path(path).stem().string();
}

std::vector<std::string> split_command(const std::string& command) {
    std::istringstream in(command);
    std::vector<std::string> parts;
    std::string token;
    while (in >> token) {
        parts.push_back(token);
    }
    return parts;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"KEN-style subnetwork extraction and analysis for weight checkpoints"};
    app.require_subcommand(1);
    app.set_version_flag("--version", []() { return std::string(kf_version()); });
    app.add_flag("-q,--quiet", g_quiet, "Suppress stderr logs");
    app.add_flag("-v,--verbose", g_verbose, "Verbose stderr logs");

    // distill ------------------------------------------------------------
    auto* distill_cmd =
        app.add_subcommand("distill", "Majority-vote a multi-annotator CSV into per-variant "
                                      "gold datasets (ties resolve to irony)");
    std::string distill_input;
    std::string distill_out_dir;
    std::string distill_columns;
    distill_cmd->add_option("input", distill_input, "Annotated CSV")->required();
    distill_cmd->add_option("--out-dir", distill_out_dir, "Output directory")->required();
    distill_cmd->add_option("--columns", distill_columns,
                            "Header remap, e.g. id_sentence=msg_id,label=tag");

    // prune --------------------------------------------------------------
    auto* prune_cmd = app.add_subcommand(
        "prune", "Build row-wise top-k retention masks and the pruned checkpoint");
    std::string prune_pre, prune_fine, prune_out_masks, prune_out_pruned;
    std::vector<std::string> prune_tensors, prune_report_tensors;
    std::string prune_regex;
    std::uint64_t prune_k = 0;
    KdeFlags prune_kde;
    prune_cmd->add_option("--pre", prune_pre, "Pre-trained checkpoint (.kenc)")->required();
    prune_cmd->add_option("--fine", prune_fine, "Fine-tuned checkpoint (.kenc)")->required();
    prune_cmd->add_option("--k", prune_k, "Parameters retained per matrix row")->required();
    auto* prune_tensors_opt =
        prune_cmd->add_option("--tensors", prune_tensors, "Prunable tensor names")
            ->delimiter(',');
    auto* prune_regex_opt =
        prune_cmd->add_option("--tensors-regex", prune_regex, "Prunable tensor name regex");
    prune_tensors_opt->excludes(prune_regex_opt);
    prune_regex_opt->excludes(prune_tensors_opt);
    prune_cmd->add_option("--out-masks", prune_out_masks, "Mask set output (.kenm)");
    prune_cmd->add_option("--out-pruned", prune_out_pruned, "Pruned checkpoint output (.kenc)");
    prune_cmd->add_option("--report-tensors", prune_report_tensors,
                          "Report reset percentage over exactly these tensors")
        ->delimiter(',');
    prune_kde.attach(prune_cmd);

    // sweep --------------------------------------------------------------
    auto* sweep_cmd = app.add_subcommand(
        "sweep", "Incrementally raise k until the pruned model reaches the baseline score");
    std::string sweep_pre, sweep_fine, sweep_out_masks, sweep_out_pruned, sweep_eval_cmd;
    std::vector<std::string> sweep_tensors;
    std::string sweep_regex;
    std::vector<std::uint64_t> sweep_schedule;
    bool sweep_synthetic = false;
    double sweep_baseline = 0.0;
    KdeFlags sweep_kde;
    sweep_cmd->add_option("--pre", sweep_pre, "Pre-trained checkpoint (.kenc)")->required();
    sweep_cmd->add_option("--fine", sweep_fine, "Fine-tuned checkpoint (.kenc)")->required();
    auto* sweep_tensors_opt =
        sweep_cmd->add_option("--tensors", sweep_tensors, "Prunable tensor names")
            ->delimiter(',');
    auto* sweep_regex_opt =
        sweep_cmd->add_option("--tensors-regex", sweep_regex, "Prunable tensor name regex");
    sweep_tensors_opt->excludes(sweep_regex_opt);
    sweep_regex_opt->excludes(sweep_tensors_opt);
    sweep_cmd->add_option("--schedule", sweep_schedule, "Ascending k values, e.g. 8,16,32")
        ->delimiter(',')
        ->required();
    auto* sweep_eval_cmd_opt = sweep_cmd->add_option(
        "--eval-cmd", sweep_eval_cmd,
        "Evaluator command; invoked as <cmd...> <checkpoint>, must print a score");
    auto* sweep_synth_opt = sweep_cmd->add_flag(
        "--eval-synthetic", sweep_synthetic,
        "Built-in evaluator: -||pruned - fine||^2 (for tests and dry runs)");
    sweep_eval_cmd_opt->excludes(sweep_synth_opt);
    sweep_synth_opt->excludes(sweep_eval_cmd_opt);
    auto* sweep_baseline_opt = sweep_cmd->add_option(
        "--baseline", sweep_baseline, "Score to reach (default: evaluator score of --fine)");
    sweep_cmd->add_option("--out-masks", sweep_out_masks, "Winning mask set output (.kenm)");
    sweep_cmd->add_option("--out-pruned", sweep_out_pruned,
                          "Winning pruned checkpoint output (.kenc)");
    sweep_kde.attach(sweep_cmd);

    // compare ------------------------------------------------------------
    auto* compare_cmd =
        app.add_subcommand("compare", "Pairwise retained-parameter overlap of two mask sets");
    std::string compare_a, compare_b, compare_label_a, compare_label_b, compare_regex;
    std::string compare_out_json, compare_out_csv;
    std::vector<std::string> compare_tensors;
    compare_cmd->add_option("a", compare_a, "First mask set (.kenm)")->required();
    compare_cmd->add_option("b", compare_b, "Second mask set (.kenm)")->required();
    auto* compare_tensors_opt =
        compare_cmd->add_option("--tensors", compare_tensors, "Tensor names to compare")
            ->delimiter(',');
    auto* compare_regex_opt =
        compare_cmd->add_option("--tensors-regex", compare_regex, "Tensor name regex");
    compare_tensors_opt->excludes(compare_regex_opt);
    compare_regex_opt->excludes(compare_tensors_opt);
    compare_cmd->add_option("--label-a", compare_label_a,
                            "Label for A (default: meta variant or file stem)");
    compare_cmd->add_option("--label-b", compare_label_b, "Label for B");
    compare_cmd->add_option("--out", compare_out_json, "Also write the JSON report here");
    compare_cmd->add_option("--out-csv", compare_out_csv,
                            "Also write a one-row similarity table CSV");

    // inbreadth ----------------------------------------------------------
    auto* inbreadth_cmd = app.add_subcommand(
        "inbreadth", "Intersect retained parameters across all given mask sets");
    std::vector<std::string> inbreadth_files, inbreadth_labels, inbreadth_tensors;
    std::string inbreadth_regex, inbreadth_out;
    inbreadth_cmd->add_option("masks", inbreadth_files, "Mask sets (.kenm), at least two")
        ->required()
        ->expected(-2);
    inbreadth_cmd->add_option("--labels", inbreadth_labels, "Labels, one per mask set")
        ->delimiter(',');
    auto* inbreadth_tensors_opt =
        inbreadth_cmd->add_option("--tensors", inbreadth_tensors, "Tensor names to intersect")
            ->delimiter(',');
    auto* inbreadth_regex_opt =
        inbreadth_cmd->add_option("--tensors-regex", inbreadth_regex, "Tensor name regex");
    inbreadth_tensors_opt->excludes(inbreadth_regex_opt);
    inbreadth_regex_opt->excludes(inbreadth_tensors_opt);
    inbreadth_cmd->add_option("--out", inbreadth_out, "Also write the JSON report here");

    // viz ----------------------------------------------------------------
    auto* viz_cmd = app.add_subcommand(
        "viz", "Emit tri-panel common/A-only/B-only grids for one tensor");
    std::string viz_a, viz_b, viz_tensor, viz_prefix;
    std::string viz_format = "pgm";
    std::uint64_t viz_stride = 1;
    viz_cmd->add_option("a", viz_a, "First mask set (.kenm)")->required();
    viz_cmd->add_option("b", viz_b, "Second mask set (.kenm)")->required();
    viz_cmd->add_option("--tensor", viz_tensor, "Tensor to visualize")->required();
    viz_cmd->add_option("--out-prefix", viz_prefix, "Output path prefix")->required();
    viz_cmd->add_option("--format", viz_format, "Output format")
        ->check(CLI::IsMember({"pgm", "csv"}))
        ->capture_default_str();
    viz_cmd->add_option("--stride", viz_stride, "Block downsample factor (lossy when > 1)")
        ->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return KF_STATUS_INPUT;
    }

    if (distill_cmd->parsed()) {
        OwnedString stats;
        check(kf_distill_csv(distill_input.c_str(), distill_out_dir.c_str(),
                             distill_columns.empty() ? nullptr : distill_columns.c_str(),
                             &stats.s));
        log_info("wrote variant datasets to " + distill_out_dir);
        std::cout << stats.str() << "\n";
        return 0;
    }

    if (prune_cmd->parsed()) {
        const kf_kde_config config = prune_kde.resolve(prune_cmd);
        CheckpointPtr pre = read_checkpoint(prune_pre);
        CheckpointPtr fine = read_checkpoint(prune_fine);
        const std::vector<std::string> prunable =
            resolve_prunable(pre.get(), fine.get(), prune_tensors, prune_regex);

        kf_maskset* masks_raw = nullptr;
        const auto names = c_strings(prunable);
        check(kf_build_masks(fine.get(), names.data(), names.size(), prune_k, &config,
                             &masks_raw));
        MasksetPtr masks(masks_raw, &kf_maskset_free);

        if (!prune_out_masks.empty()) {
            check(kf_maskset_write(masks.get(), prune_out_masks.c_str()));
            log_info("wrote mask set " + prune_out_masks);
        }
        if (!prune_out_pruned.empty()) {
            kf_checkpoint* pruned_raw = nullptr;
            check(kf_apply_masks(pre.get(), fine.get(), masks.get(), &pruned_raw));
            CheckpointPtr pruned(pruned_raw, &kf_checkpoint_free);
            check(kf_checkpoint_write(pruned.get(), prune_out_pruned.c_str()));
            log_info("wrote pruned checkpoint " + prune_out_pruned);
        }

        OwnedString report;
        if (prune_report_tensors.empty()) {
            check(kf_reset_report_json(masks.get(), fine.get(), nullptr, 0, &report.s));
        } else {
            const auto scope = c_strings(prune_report_tensors);
            check(kf_reset_report_json(masks.get(), fine.get(), scope.data(), scope.size(),
                                       &report.s));
        }
        std::cout << report.str() << "\n";
        return 0;
    }

    if (sweep_cmd->parsed()) {
        const kf_kde_config config = sweep_kde.resolve(sweep_cmd);
        if (sweep_eval_cmd_opt->count() == 0 && !sweep_synthetic) {
            std::cerr << "sweep: one of --eval-cmd or --eval-synthetic is required\n";
            return KF_STATUS_INPUT;
        }
        CheckpointPtr pre = read_checkpoint(sweep_pre);
        CheckpointPtr fine = read_checkpoint(sweep_fine);
        const std::vector<std::string> prunable =
            resolve_prunable(pre.get(), fine.get(), sweep_tensors, sweep_regex);

        kf_evaluator* eval_raw = nullptr;
        if (sweep_synthetic) {
            check(kf_evaluator_synthetic_new(fine.get(), &eval_raw));
        } else {
            const std::vector<std::string> parts = split_command(sweep_eval_cmd);
            if (parts.empty()) {
                std::cerr << "sweep: --eval-cmd is empty\n";
                return KF_STATUS_INPUT;
            }
            const auto command = c_strings(parts);
            check(kf_evaluator_external_new(command.data(), command.size(), &eval_raw));
        }
        EvaluatorPtr evaluator(eval_raw, &kf_evaluator_free);

        double baseline = sweep_baseline;
        if (sweep_baseline_opt->count() == 0) {
            check(kf_evaluator_score(evaluator.get(), fine.get(), &baseline));
            log_info("baseline = evaluator score of the fine-tuned checkpoint");
        }

        const auto names = c_strings(prunable);
        kf_maskset* masks_raw = nullptr;
        OwnedString trace;
        check(kf_k_sweep(pre.get(), fine.get(), names.data(), names.size(), &config,
                         evaluator.get(), sweep_schedule.data(), sweep_schedule.size(),
                         baseline, &masks_raw, &trace.s));
        MasksetPtr masks(masks_raw, &kf_maskset_free);

        if (!sweep_out_masks.empty()) {
            check(kf_maskset_write(masks.get(), sweep_out_masks.c_str()));
            log_info("wrote mask set " + sweep_out_masks);
        }
        if (!sweep_out_pruned.empty()) {
            kf_checkpoint* pruned_raw = nullptr;
            check(kf_apply_masks(pre.get(), fine.get(), masks.get(), &pruned_raw));
            CheckpointPtr pruned(pruned_raw, &kf_checkpoint_free);
            check(kf_checkpoint_write(pruned.get(), sweep_out_pruned.c_str()));
            log_info("wrote pruned checkpoint " + sweep_out_pruned);
        }
        std::cout << trace.str() << "\n";
        return 0;
    }

    if (compare_cmd->parsed()) {
        MasksetPtr a = read_maskset(compare_a);
        MasksetPtr b = read_maskset(compare_b);
        const std::string label_a =
            compare_label_a.empty() ? default_mask_label(a.get(), compare_a) : compare_label_a;
        const std::string label_b =
            compare_label_b.empty() ? default_mask_label(b.get(), compare_b) : compare_label_b;

        const auto names = c_strings(compare_tensors);
        OwnedString report;
        check(kf_pairwise_overlap_json(a.get(), b.get(), label_a.c_str(), label_b.c_str(),
                                       names.empty() ? nullptr : names.data(), names.size(),
                                       compare_regex.empty() ? nullptr : compare_regex.c_str(),
                                       &report.s));
        if (!compare_out_json.empty()) {
            write_text_file(compare_out_json, report.str() + "\n");
            log_info("wrote report " + compare_out_json);
        }
        if (!compare_out_csv.empty()) {
            const char* reports[1] = {report.s};
            check(kf_emit_overlap_table(reports, 1, compare_out_csv.c_str()));
            log_info("wrote table " + compare_out_csv);
        }
        std::cout << report.str() << "\n";
        return 0;
    }

    if (inbreadth_cmd->parsed()) {
        std::vector<MasksetPtr> owners;
        std::vector<const kf_maskset*> sets;
        std::vector<std::string> labels = inbreadth_labels;
        if (!labels.empty() && labels.size() != inbreadth_files.size()) {
            std::cerr << "inbreadth: expected " << inbreadth_files.size() << " labels, got "
                      << labels.size() << "\n";
            return KF_STATUS_INPUT;
        }
        for (std::size_t i = 0; i < inbreadth_files.size(); ++i) {
            owners.push_back(read_maskset(inbreadth_files[i]));
            sets.push_back(owners.back().get());
            if (labels.size() < owners.size()) {
                labels.push_back(default_mask_label(owners.back().get(), inbreadth_files[i]));
            }
        }
        const auto label_ptrs = c_strings(labels);
        const auto names = c_strings(inbreadth_tensors);
        OwnedString report;
        check(kf_in_breadth_json(sets.data(), label_ptrs.data(), sets.size(),
                                 names.empty() ? nullptr : names.data(), names.size(),
                                 inbreadth_regex.empty() ? nullptr : inbreadth_regex.c_str(),
                                 &report.s));
        if (!inbreadth_out.empty()) {
            write_text_file(inbreadth_out, report.str() + "\n");
            log_info("wrote report " + inbreadth_out);
        }
        std::cout << report.str() << "\n";
        return 0;
    }

    if (viz_cmd->parsed()) {
        MasksetPtr a = read_maskset(viz_a);
        MasksetPtr b = read_maskset(viz_b);
        OwnedString files;
        check(kf_emit_tri_panel(a.get(), b.get(), viz_tensor.c_str(), viz_prefix.c_str(),
                                viz_format == "csv" ? KF_GRID_CSV : KF_GRID_PGM, viz_stride,
                                &files.s));
        log_info("wrote tri-panel grids with prefix " + viz_prefix);
        std::cout << files.str() << "\n";
        return 0;
    }

    return KF_STATUS_INTERNAL;  // unreachable: a subcommand is required
}
