/*
    Licensed under the Apache License, Version 2.0 (the "License");
    you may not use this file except in compliance with the License.
    You may obtain a copy of the License at

        https://www.apache.org/licenses/LICENSE-2.0

    Unless required by applicable law or agreed to in writing, software
    distributed under the License is distributed on an "AS IS" BASIS,
    WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
    See the License for the specific language governing permissions and
    limitations under the License.
*/
#pragma once

#include "mgdvd/detector.hpp"
#include "mgdvd/synthgen.hpp"
#include "mgdvd/trainer.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mgdvd {

struct LabeledStream {
    std::string sample_id;
    std::string label;
    Split split{Split::train};
    std::vector<Event> events;
};

/// Streams listed in <dir>/manifest.tsv, in manifest order, optionally only
/// one split.
std::vector<LabeledStream> load_corpus(const std::string& dir, std::optional<Split> split = std::nullopt,
                                       const NetworkSchema& schema = default_schema());

std::vector<TrainingSample> analyze_corpus(std::span<const LabeledStream> streams, const PipelineConfig& cfg,
                                           const Catalog& catalog);

/// Macro-F1 over the labels of `streams`; a stream without a decided label
/// counts as a miss for its own label.
double macro_f1(std::span<const std::string> truth, std::span<const std::string> predicted);

/// Threshold in [0, 0.99] (steps of 0.01) with the best macro-F1 on the given
/// streams; among equally good thresholds the middle one (lower on an even
/// count) is returned.
double calibrate_tau(const ModelParams& params, const Gallery& gallery, std::span<const TrainingSample> streams,
                     const DetectorConfig& base);

struct BenchRow {
    WalkMode mode{WalkMode::automatic};
    std::size_t streams{0};
    std::size_t windows{0};
    std::size_t low_churn_windows{0};
    double total_ms{0.0}; // median over repetitions
    double per_window_ms{0.0};
    double accuracy{0.0};
    std::vector<double> rep_ms;
};

/// Runs stream_detect over every stream (all windows, keep_running) for each
/// mode, `reps` times, on a monotonic clock.
std::vector<BenchRow> run_bench(std::span<const LabeledStream> streams, std::span<const WalkMode> modes,
                                const ModelParams& params, const Gallery& gallery, const DetectorConfig& detector,
                                const PipelineConfig& pipeline, const Catalog& catalog, int reps);

std::string format_bench_table(std::span<const BenchRow> rows);

struct FamilyWeights {
    std::string label;
    std::size_t windows{0};
    std::vector<double> theta; // mean attention weight per meta-graph, catalog order
};

/// Mean meta-graph attention per family over every window of its streams.
std::vector<FamilyWeights> inspect_weights(const ModelParams& params, std::span<const TrainingSample> samples,
                                           const Catalog& catalog);

/// Meta-graph ids by decreasing weight, ties by id.
std::vector<int> ranked_metagraphs(const FamilyWeights& row, const Catalog& catalog);

std::string format_weight_table(std::span<const FamilyWeights> rows, const Catalog& catalog, std::size_t top_k);

} // namespace mgdvd
