// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

#include "core/bitmatrix.hpp"
#include "core/checkpoint.hpp"
#include "core/kde.hpp"

namespace kenforge {

// Per-tensor retention masks: 1 = keep the fine-tuned value, 0 = revert to
// the pre-trained one. Built by row-wise top-k density selection, so every
// mask row carries exactly min(k_per_row, cols) ones.
struct MaskSet {
    std::map<std::string, BitMatrix> masks;
    std::uint64_t k_per_row = 0;
    std::map<std::string, std::string> source_meta;

    bool has(const std::string& name) const { return masks.count(name) > 0; }
    const BitMatrix& mask(const std::string& name) const;
};

struct PruneReport {
    struct TensorCounts {
        std::uint64_t retained = 0;
        std::uint64_t total = 0;
    };
    std::map<std::string, TensorCounts> per_tensor;
    double model_reset_pct = 0.0;  // 100 * (1 - sum(retained) / sum(total))
};

enum class ResetScope { masked_only, all_named };

// Scoring hook standing in for downstream task evaluation. Implementations
// must be deterministic for a given checkpoint; higher scores are better.
class Evaluator {
public:
    virtual ~Evaluator() = default;
    virtual double score(const Checkpoint& pruned) = 0;
};

// score(c) = -sum((c - reference)^2) over all tensors. Exact 0 iff the
// candidate matches the reference numerically; used for tests and dry runs.
class SyntheticQuadraticEvaluator : public Evaluator {
public:
    explicit SyntheticQuadraticEvaluator(Checkpoint reference);
    double score(const Checkpoint& pruned) override;

private:
    Checkpoint reference_;
};

// Writes the candidate checkpoint to a temp file and runs
// [command..., path]. The command must exit 0 and print a decimal score as
// the last whitespace-delimited token of its stdout.
class ExternalCommandEvaluator : public Evaluator {
public:
    explicit ExternalCommandEvaluator(std::vector<std::string> command);
    double score(const Checkpoint& pruned) override;

private:
    std::vector<std::string> command_;
};

struct SweepPoint {
    std::uint64_t k = 0;
    double score = 0.0;
    bool meets_baseline = false;
};

struct SweepResult {
    std::uint64_t k_star = 0;
    bool reached_baseline = false;  // false = no k in the schedule reached baseline
    MaskSet masks;                  // masks for k_star
    std::vector<SweepPoint> trace;
};

// Row-wise top-k retention masks for the listed tensors of `fine`.
MaskSet build_masks(const Checkpoint& fine, const std::vector<std::string>& prunable,
                    std::uint64_t k, const KdeConfig& config);

// out[i,j] = fine[i,j] where masked 1, pre[i,j] where masked 0; tensors
// without a mask pass through from fine. meta is fine's with state=pruned.
Checkpoint apply_masks(const Checkpoint& pre, const Checkpoint& fine, const MaskSet& masks);

// Retained/total counts and the model-level reset percentage. Scope
// masked_only counts masked tensors; all_named counts exactly the listed
// tensors (unmasked ones contribute zero retained).
PruneReport reset_percentage(const MaskSet& masks, const Checkpoint& fine, ResetScope scope,
                             const std::vector<std::string>& scope_names = {});

// Walks the ascending k schedule, scoring apply_masks(pre, fine, masks(k))
// until the evaluator reaches `baseline`. Returns the first qualifying k,
// or the last schedule entry with reached_baseline = false.
SweepResult k_sweep(const Checkpoint& pre, const Checkpoint& fine,
                    const std::vector<std::string>& prunable, const KdeConfig& config,
                    Evaluator& evaluator, const std::vector<std::uint64_t>& schedule,
                    double baseline);

// KENM v1 mask container I/O. Layout documented in pruning.cpp.
MaskSet read_maskset(const std::string& path);
void write_maskset(const MaskSet& masks, const std::string& path);

// Report serializations (keys sorted).
nlohmann::json prune_report_json(const PruneReport& report);
nlohmann::json sweep_result_json(const SweepResult& result, double baseline);

}  // namespace kenforge
