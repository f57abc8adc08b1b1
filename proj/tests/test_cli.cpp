// SPDX-License-Identifier: Apache-2.0
//
// End-to-end runs of the kenforge binary (path baked in by the build).
// Fixtures are produced with the core library; assertions cover stdout
// JSON, exit codes and emitted files.
#include <sys/stat.h>
#include <sys/wait.h>

#include <cstdio>
#include <string>
#include <vector>

#include "core/checkpoint.hpp"
#include "core/pruning.hpp"
#include "doctest.h"
#include "json.hpp"
#include "oracles.hpp"

namespace {

struct CliResult {
    int exit_code = -1;
    std::string out;
};

CliResult run_cli(const std::string& args, const std::string& env = "") {
    const std::string command =
        (env.empty() ? "" : env + " ") + std::string(KENFORGE_CLI_PATH) + " " + args +
        " 2>/dev/null";
    CliResult result;
    FILE* pipe = popen(command.c_str(), "r");
    REQUIRE(pipe != nullptr);
    char buffer[4096];
    std::size_t n = 0;
    while ((n = fread(buffer, 1, sizeof(buffer), pipe)) > 0) {
        result.out.append(buffer, n);
    }
    const int status = pclose(pipe);
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return result;
}

// pre = zeros, fine = clusters + outliers; prune-ready pair
void write_fixture_pair(const std::string& pre_path, const std::string& fine_path) {
    kenforge::Checkpoint pre;
    pre.add_tensor("attn.q", 2, 4, std::vector<float>(8, 0.0F));
    pre.add_tensor("attn.k", 2, 4, std::vector<float>(8, 0.0F));
    pre.meta["model"] = "demo";
    pre.meta["state"] = "pretrained";
    kenforge::write_checkpoint(pre, pre_path);

    kenforge::Checkpoint fine;
    fine.add_tensor("attn.q", 2, 4, {0.9F, 1.0F, 1.1F, 5.0F, 2.0F, 2.1F, 1.9F, -3.0F});
    fine.add_tensor("attn.k", 2, 4, {0.5F, 0.4F, 0.6F, 9.0F, 1.5F, 1.4F, 1.6F, -7.0F});
    fine.meta["model"] = "demo";
    fine.meta["variant"] = "AU";
    fine.meta["state"] = "finetuned";
    kenforge::write_checkpoint(fine, fine_path);
}

}  // namespace

TEST_SUITE_BEGIN("cli");

TEST_CASE("help and usage errors") {
    CHECK(run_cli("--help").exit_code == 0);
    CHECK(run_cli("prune --help").exit_code == 0);
    CHECK(run_cli("").exit_code == 2);             // subcommand required
    CHECK(run_cli("frobnicate").exit_code == 2);   // unknown subcommand
    CHECK(run_cli("prune").exit_code == 2);        // missing required flags
}

TEST_CASE("prune: writes masks + pruned checkpoint and prints the reset report") {
    oracle::TempDir dir;
    const std::string pre = dir.file("pre.kenc");
    const std::string fine = dir.file("fine.kenc");
    write_fixture_pair(pre, fine);
    const std::string masks = dir.file("masks.kenm");
    const std::string pruned = dir.file("pruned.kenc");

    const CliResult result = run_cli("prune --pre " + pre + " --fine " + fine +
                                     " --k 2 --tensors attn.q,attn.k --bandwidth fixed "
                                     "--fixed-h 0.3 --out-masks " + masks +
                                     " --out-pruned " + pruned);
    REQUIRE(result.exit_code == 0);
    const auto report = nlohmann::json::parse(result.out);
    CHECK(report.at("model_reset_pct") == doctest::Approx(50.0));
    CHECK(report.at("per_tensor").at("attn.q").at("retained") == 4);

    const kenforge::MaskSet loaded = kenforge::read_maskset(masks);
    CHECK(loaded.k_per_row == 2);
    CHECK(loaded.masks.size() == 2);
    CHECK(loaded.source_meta.at("variant") == "AU");

    const kenforge::Checkpoint out = kenforge::read_checkpoint(pruned);
    CHECK(out.meta.at("state") == "pruned");
}

TEST_CASE("prune: --k cols reproduces fine, --k 0 reproduces pre on selected tensors") {
    oracle::TempDir dir;
    const std::string pre = dir.file("pre.kenc");
    const std::string fine = dir.file("fine.kenc");
    write_fixture_pair(pre, fine);

    const std::string full = dir.file("full.kenc");
    REQUIRE(run_cli("prune --pre " + pre + " --fine " + fine +
                    " --k 4 --tensors-regex ^attn --out-pruned " + full)
                .exit_code == 0);
    const kenforge::Checkpoint full_ckpt = kenforge::read_checkpoint(full);
    const kenforge::Checkpoint fine_ckpt = kenforge::read_checkpoint(fine);
    for (const auto& [name, t] : fine_ckpt.tensors) {
        CHECK(kenforge::bit_equal(full_ckpt.tensor(name).values, t.values));
    }

    const std::string none = dir.file("none.kenc");
    REQUIRE(run_cli("prune --pre " + pre + " --fine " + fine +
                    " --k 0 --tensors attn.q,attn.k --out-pruned " + none)
                .exit_code == 0);
    const kenforge::Checkpoint none_ckpt = kenforge::read_checkpoint(none);
    const kenforge::Checkpoint pre_ckpt = kenforge::read_checkpoint(pre);
    for (const auto& [name, t] : pre_ckpt.tensors) {
        CHECK(kenforge::bit_equal(none_ckpt.tensor(name).values, t.values));
    }
}

TEST_CASE("prune: exit codes for bad inputs") {
    oracle::TempDir dir;
    const std::string pre = dir.file("pre.kenc");
    const std::string fine = dir.file("fine.kenc");
    write_fixture_pair(pre, fine);

    // missing file names the path
    CHECK(run_cli("prune --pre " + dir.file("nope.kenc") + " --fine " + fine + " --k 1")
              .exit_code == 2);
    // mutually exclusive tensor selectors
    CHECK(run_cli("prune --pre " + pre + " --fine " + fine +
                  " --k 1 --tensors attn.q --tensors-regex attn")
              .exit_code == 2);
    // --fixed-h without --bandwidth fixed
    CHECK(run_cli("prune --pre " + pre + " --fine " + fine + " --k 1 --fixed-h 0.5")
              .exit_code == 2);
    // unknown tensor
    CHECK(run_cli("prune --pre " + pre + " --fine " + fine + " --k 1 --tensors nope")
              .exit_code == 2);
}

TEST_CASE("sweep: synthetic evaluator finds the smallest covering k") {
    oracle::TempDir dir;
    const std::string pre = dir.file("pre.kenc");
    const std::string fine = dir.file("fine.kenc");
    write_fixture_pair(pre, fine);

    const CliResult result =
        run_cli("sweep --pre " + pre + " --fine " + fine +
                " --schedule 1,2,4 --eval-synthetic --bandwidth fixed --fixed-h 0.3");
    REQUIRE(result.exit_code == 0);
    const auto j = nlohmann::json::parse(result.out);
    CHECK(j.at("reached_baseline") == true);
    CHECK(j.at("k_star") == 4);  // every row has an outlier only k=cols covers
    CHECK(j.at("trace").size() == 3);
    CHECK(j.at("trace")[0].at("meets_baseline") == false);
}

TEST_CASE("sweep: external evaluator command and failure exit code") {
    oracle::TempDir dir;
    const std::string pre = dir.file("pre.kenc");
    const std::string fine = dir.file("fine.kenc");
    write_fixture_pair(pre, fine);

    const std::string good = dir.file("good.sh");
    oracle::write_file_bytes(good, "#!/bin/sh\necho 1.0\n");
    chmod(good.c_str(), 0755);
    const CliResult ok = run_cli("sweep --pre " + pre + " --fine " + fine +
                                 " --schedule 1,2 --eval-cmd '" + good + "' --baseline 0.5");
    REQUIRE(ok.exit_code == 0);
    CHECK(nlohmann::json::parse(ok.out).at("k_star") == 1);

    const std::string bad = dir.file("bad.sh");
    oracle::write_file_bytes(bad, "#!/bin/sh\nexit 5\n");
    chmod(bad.c_str(), 0755);
    const CliResult failed = run_cli("sweep --pre " + pre + " --fine " + fine +
                                     " --schedule 1,2 --eval-cmd '" + bad + "' --baseline 0");
    CHECK(failed.exit_code == 3);

    // requires an evaluator choice
    CHECK(run_cli("sweep --pre " + pre + " --fine " + fine + " --schedule 1").exit_code == 2);
}

TEST_CASE("compare/viz/inbreadth pipeline over CLI-produced masks") {
    oracle::TempDir dir;
    const std::string pre = dir.file("pre.kenc");
    const std::string fine = dir.file("fine.kenc");
    write_fixture_pair(pre, fine);
    const std::string masks = dir.file("m.kenm");
    REQUIRE(run_cli("prune --pre " + pre + " --fine " + fine +
                    " --k 2 --tensors attn.q,attn.k --out-masks " + masks)
                .exit_code == 0);

    SUBCASE("compare of a mask set with itself is 100.00") {
        const std::string csv = dir.file("table.csv");
        const CliResult result =
            run_cli("compare " + masks + " " + masks + " --label-b other --out-csv " + csv);
        REQUIRE(result.exit_code == 0);
        const auto j = nlohmann::json::parse(result.out);
        CHECK(j.at("overlap_pct") == 100.0);
        CHECK(j.at("pair").at("label_a") == "AU");  // from mask meta variant
        CHECK(j.at("pair").at("label_b") == "other");
        const std::string table = oracle::read_file_bytes(csv);
        CHECK(table.find("100.00") != std::string::npos);
    }
    SUBCASE("inbreadth intersects and honors --labels") {
        const CliResult result =
            run_cli("inbreadth " + masks + " " + masks + " " + masks + " --labels a,b,c");
        REQUIRE(result.exit_code == 0);
        const auto j = nlohmann::json::parse(result.out);
        CHECK(j.at("labels") == nlohmann::json::array({"a", "b", "c"}));
        CHECK(j.at("total_common") == 8);  // k=2, 2 tensors, 2 rows each
        CHECK(run_cli("inbreadth " + masks).exit_code == 2);  // needs at least two
    }
    SUBCASE("viz emits a disjoint tri-panel") {
        const CliResult result = run_cli("viz " + masks + " " + masks +
                                         " --tensor attn.q --out-prefix " + dir.file("panel") +
                                         " --format pgm");
        REQUIRE(result.exit_code == 0);
        const auto files = nlohmann::json::parse(result.out);
        REQUIRE(files.size() == 3);
        const std::string common = oracle::read_file_bytes(files[0].get<std::string>());
        const std::string a_only = oracle::read_file_bytes(files[1].get<std::string>());
        CHECK(common.substr(0, 9) == "P5\n4 2\n25");
        // self-compare: a_only is all white, common carries the mask
        CHECK(a_only.find('\x00') == std::string::npos);
        CHECK(common.find('\x00') != std::string::npos);

        CHECK(run_cli("viz " + masks + " " + masks +
                      " --tensor nope --out-prefix " + dir.file("x"))
                  .exit_code == 2);
    }
}

TEST_CASE("KENFORGE_THREADS does not change any output byte") {
    oracle::TempDir dir;
    const std::string pre = dir.file("pre.kenc");
    const std::string fine = dir.file("fine.kenc");
    write_fixture_pair(pre, fine);

    std::vector<std::string> outputs;
    for (const char* threads : {"1", "4"}) {
        const std::string masks = dir.file(std::string("m") + threads + ".kenm");
        const std::string pruned = dir.file(std::string("p") + threads + ".kenc");
        const CliResult result = run_cli("prune --pre " + pre + " --fine " + fine +
                                         " --k 2 --tensors attn.q,attn.k --out-masks " + masks +
                                         " --out-pruned " + pruned,
                                         std::string("KENFORGE_THREADS=") + threads);
        REQUIRE(result.exit_code == 0);
        outputs.push_back(result.out + oracle::read_file_bytes(masks) +
                          oracle::read_file_bytes(pruned));
    }
    CHECK(outputs[0] == outputs[1]);
}

TEST_CASE("distill: end-to-end with column remap and exit codes") {
    oracle::TempDir dir;
    const std::string csv = dir.file("epic.csv");
    oracle::write_file_bytes(csv,
                             "msg,body,region,user,tag\n"
                             "s1,lovely weather,GB,a1,iro\n"
                             "s1,lovely weather,GB,a2,not\n"
                             "s2,nice one,IE,a1,iro\n");
    const std::string out_dir = dir.file("out");
    const CliResult result = run_cli(
        "distill " + csv + " --out-dir " + out_dir +
        " --columns id_sentence=msg,text=body,variant=region,annotator=user,label=tag");
    REQUIRE(result.exit_code == 0);
    const auto stats = nlohmann::json::parse(result.out);
    CHECK(stats.at("variants").size() == 2);
    CHECK(oracle::read_file_bytes(out_dir + "/GB.csv") ==
          "id,text,label\ns1,lovely weather,irony\n");
    CHECK(oracle::read_file_bytes(out_dir + "/stats.json").find("n_ties_resolved") !=
          std::string::npos);

    CHECK(run_cli("distill " + dir.file("absent.csv") + " --out-dir " + out_dir).exit_code ==
          2);
}

TEST_SUITE_END();
