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
#include "mgdvd/params.hpp"
#include "mgdvd/pipeline.hpp"
#include "mgdvd/rng.hpp"

#include <cstdint>
#include <functional>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace mgdvd {

struct OptimizerConfig {
    double lr{1e-3};
    double beta1{0.9};
    double beta2{0.999};
    double epsilon{1e-8};
    int epochs{200};
    std::size_t batch_pairs{64};  // half same-family, half cross-family
    std::size_t pair_budget{128}; // same-family pairs per epoch
    std::uint64_t seed{1};

    void validate() const;
};

/// y = +1 for the same family, -1 otherwise.
struct EmbeddingPair {
    Vector a;
    Vector b;
    int y{1};
};

/// Σ (ρ(a, b) - y)². Errors as pearson().
double pair_loss(std::span<const EmbeddingPair> pairs);

/// One labelled stream, pre-analysed into parameter-independent window inputs.
struct TrainingSample {
    std::string sample_id;
    std::string label;
    std::vector<WindowAnalysis> windows;
};

/// Indices into the sample list.
struct TrainingPair {
    std::size_t a{0};
    std::size_t b{0};
    int y{1};
};

/// All same-label pairs (a random subset when more than `budget`), then the
/// same number of random cross-label pairs.
std::vector<TrainingPair> sample_pairs(std::span<const std::string> labels, std::size_t budget, Rng& rng);

/// Loss over `pairs`, each sample embedded by its full window chain with the
/// final-window embedding entering the pair. When `grad` is given it receives
/// ∂loss/∂params (zeroed first), back-propagated through every window. Pairs
/// touching a constant embedding are skipped and counted in `skipped`.
double batch_loss(const ModelParams& params, std::span<const TrainingSample> samples,
                  std::span<const TrainingPair> pairs, ModelParams* grad, std::size_t* skipped = nullptr);

struct EpochStats {
    int epoch{0};
    double loss{0.0};      // mean per-pair loss on the evaluation pairs after the epoch
    std::size_t pairs{0};  // training pairs visited
    std::size_t steps{0};  // optimiser updates
};

struct TrainResult {
    ModelParams params; // best evaluation loss seen, initial parameters included
    std::vector<EpochStats> curve;
    double initial_loss{0.0};
    double best_loss{0.0};
    int best_epoch{0};
};

/// Errors: insufficient_families (fewer than two labels with windows),
/// divergence (non-finite loss), invalid_argument (bad optimiser config).
TrainResult train(std::span<const TrainingSample> samples, const OptimizerConfig& cfg, const ModelHyperparams& hp,
                  const std::function<void(const EpochStats&)>& on_epoch = {});

/// Gallery of final-window embeddings, one entry per sample.
Gallery build_gallery(const ModelParams& params, std::span<const TrainingSample> samples);

struct GradientCheckReport {
    double max_rel_error{0.0};
    std::string worst_segment;
    std::size_t worst_index{0};
    std::size_t checked{0};
    double frozen_max_abs{0.0}; // largest analytic gradient reported for a frozen scalar
};

/// Compares the analytic gradient of batch_loss with central differences,
/// error |analytic - numeric| / max(1, |analytic|). Scalars in `frozen`
/// segments report an analytic gradient of 0 and are not differenced. With
/// `per_segment` > 0 only that many randomly chosen scalars of each segment
/// are checked.
GradientCheckReport gradient_check(const ModelParams& params, std::span<const TrainingSample> samples,
                                   std::span<const TrainingPair> pairs, double eps,
                                   const std::set<std::string>& frozen = {}, std::size_t per_segment = 0,
                                   std::uint64_t seed = 1);

} // namespace mgdvd
