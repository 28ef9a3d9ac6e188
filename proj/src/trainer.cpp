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
#include "mgdvd/trainer.hpp"

#include "mgdvd/error.hpp"
#include "mgdvd/logging.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace mgdvd {

namespace {

struct Adam {
    explicit Adam(std::size_t n) : m(n, 0.0), v(n, 0.0) {}

    void step(const OptimizerConfig& cfg, std::span<double> params, std::span<const double> grad) {
        ++t;
        const double c1 = 1.0 - std::pow(cfg.beta1, t);
        const double c2 = 1.0 - std::pow(cfg.beta2, t);
        for (std::size_t i = 0; i < params.size(); ++i) {
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * grad[i];
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
            params[i] -= cfg.lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + cfg.epsilon);
        }
    }

    std::vector<double> m;
    std::vector<double> v;
    int t{0};
};

std::vector<TrainingPair> remap(std::vector<TrainingPair> pairs, std::span<const std::size_t> index) {
    for (auto& p : pairs) {
        p.a = index[p.a];
        p.b = index[p.b];
    }
    return pairs;
}

} // namespace

void OptimizerConfig::validate() const {
    if (!(lr >= 0.0) || !std::isfinite(lr)) {
        throw Error(Errc::invalid_argument, "learning rate must be finite and non-negative");
    }
    if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0)) {
        throw Error(Errc::invalid_argument, "moment decay rates must lie in (0, 1)");
    }
    if (!(epsilon > 0.0)) {
        throw Error(Errc::invalid_argument, "optimiser epsilon must be positive");
    }
    if (epochs < 0 || batch_pairs < 2 || pair_budget < 1) {
        throw Error(Errc::invalid_argument, "epochs >= 0, batch >= 2 and pair budget >= 1 required");
    }
}

double pair_loss(std::span<const EmbeddingPair> pairs) {
    double loss = 0.0;
    for (const auto& p : pairs) {
        if (p.y != 1 && p.y != -1) {
            throw Error(Errc::invalid_argument, "pair label must be +1 or -1");
        }
        const double diff = pearson(p.a, p.b) - p.y;
        loss += diff * diff;
    }
    return loss;
}

std::vector<TrainingPair> sample_pairs(std::span<const std::string> labels, std::size_t budget, Rng& rng) {
    std::vector<TrainingPair> same;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        for (std::size_t j = i + 1; j < labels.size(); ++j) {
            if (labels[i] == labels[j]) {
                same.push_back({i, j, 1});
            }
        }
    }
    if (same.size() > budget) {
        rng.shuffle(same.begin(), same.end());
        same.resize(budget);
    }
    const bool mixed = std::any_of(labels.begin(), labels.end(), [&](const auto& l) { return l != labels.front(); });
    std::size_t cross = mixed ? (same.empty() ? budget : same.size()) : 0;
    std::vector<TrainingPair> out = std::move(same);
    while (cross > 0) {
        const auto i = static_cast<std::size_t>(rng.below(labels.size()));
        const auto j = static_cast<std::size_t>(rng.below(labels.size()));
        if (labels[i] != labels[j]) {
            out.push_back({std::min(i, j), std::max(i, j), -1});
            --cross;
        }
    }
    return out;
}

double batch_loss(const ModelParams& params, std::span<const TrainingSample> samples,
                  std::span<const TrainingPair> pairs, ModelParams* grad, std::size_t* skipped) {
    struct Forward {
        std::vector<ForwardCache> caches;
        Vector embedding;
        Vector grad;
        bool degenerate{false};
    };
    std::map<std::size_t, Forward> forward;
    for (const auto& p : pairs) {
        for (auto s : {p.a, p.b}) {
            if (forward.contains(s)) {
                continue;
            }
            const auto& windows = samples[s].windows;
            if (windows.empty()) {
                throw Error(Errc::invalid_argument, "training pair references a sample without windows");
            }
            Forward fw;
            fw.caches.resize(windows.size());
            Vector prior = Vector::Zero(params.hyper().embed_dim);
            for (std::size_t t = 0; t < windows.size(); ++t) {
                prior = encode_window(params, windows[t].input, prior, &fw.caches[t]);
            }
            fw.embedding = std::move(prior);
            fw.grad = Vector::Zero(fw.embedding.size());
            fw.degenerate = degenerate_variance(fw.embedding);
            forward.emplace(s, std::move(fw));
        }
    }

    double loss = 0.0;
    std::size_t skip = 0;
    for (const auto& p : pairs) {
        auto& fa = forward.at(p.a);
        auto& fb = forward.at(p.b);
        if (fa.degenerate || fb.degenerate) {
            ++skip;
            continue;
        }
        const double diff = pearson(fa.embedding, fb.embedding) - p.y;
        loss += diff * diff;
        if (grad != nullptr) {
            const auto g = pearson_gradient(fa.embedding, fb.embedding);
            fa.grad += (2.0 * diff) * g.dx;
            fb.grad += (2.0 * diff) * g.dy;
        }
    }
    if (skipped != nullptr) {
        *skipped = skip;
    }
    if (grad != nullptr) {
        if (grad->size() != params.size()) {
            *grad = ModelParams(params.hyper());
        }
        grad->set_zero();
        for (auto& [s, fw] : forward) {
            if (fw.degenerate) {
                continue;
            }
            const auto& windows = samples[s].windows;
            Vector g = fw.grad;
            Vector g_prior;
            for (std::size_t t = windows.size(); t-- > 0;) {
                backward_window(params, windows[t].input, fw.caches[t], g, *grad, &g_prior);
                g = std::move(g_prior);
            }
        }
    }
    return loss;
}

TrainResult train(std::span<const TrainingSample> samples, const OptimizerConfig& cfg, const ModelHyperparams& hp,
                  const std::function<void(const EpochStats&)>& on_epoch) {
    cfg.validate();
    hp.validate();

    std::vector<std::size_t> usable;
    std::vector<std::string> labels;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (!samples[i].windows.empty()) {
            usable.push_back(i);
            labels.push_back(samples[i].label);
        }
    }
    std::set<std::string> families(labels.begin(), labels.end());
    if (families.size() < 2) {
        throw Error(Errc::insufficient_families,
                    "training needs at least two labelled families with events, got " +
                        std::to_string(families.size()));
    }

    TrainResult result;
    ModelParams params = ModelParams::initialize(hp, cfg.seed);
    Rng rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);
    const auto eval_pairs = remap(sample_pairs(labels, cfg.pair_budget, rng), usable);

    auto evaluate = [&] {
        std::size_t skipped = 0;
        const double loss = batch_loss(params, samples, eval_pairs, nullptr, &skipped);
        const auto counted = eval_pairs.size() - skipped;
        if (counted == 0) {
            throw Error(Errc::divergence, "every evaluation pair has a constant embedding");
        }
        if (!std::isfinite(loss)) {
            throw Error(Errc::divergence, "non-finite evaluation loss");
        }
        return loss / static_cast<double>(counted);
    };

    result.initial_loss = evaluate();
    result.best_loss = result.initial_loss;
    result.params = params;
    logger().info("epoch 0 loss {}", result.initial_loss);

    Adam adam(params.size());
    ModelParams grad(hp);
    const std::size_t half = std::max<std::size_t>(cfg.batch_pairs / 2, 1);
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        auto pairs = remap(sample_pairs(labels, cfg.pair_budget, rng), usable);
        std::vector<TrainingPair> pos;
        std::vector<TrainingPair> neg;
        for (const auto& p : pairs) {
            (p.y > 0 ? pos : neg).push_back(p);
        }
        rng.shuffle(pos.begin(), pos.end());
        rng.shuffle(neg.begin(), neg.end());

        EpochStats stats;
        stats.epoch = epoch;
        const std::size_t batches = (std::max(pos.size(), neg.size()) + half - 1) / half;
        for (std::size_t b = 0; b < batches; ++b) {
            std::vector<TrainingPair> batch;
            for (const auto* list : {&pos, &neg}) {
                for (std::size_t k = b * half; k < std::min((b + 1) * half, list->size()); ++k) {
                    batch.push_back((*list)[k]);
                }
            }
            const double loss = batch_loss(params, samples, batch, &grad);
            if (!std::isfinite(loss)) {
                throw Error(Errc::divergence, "non-finite loss in epoch " + std::to_string(epoch));
            }
            adam.step(cfg, params.values(), grad.values());
            stats.pairs += batch.size();
            ++stats.steps;
        }
        for (double v : params.values()) {
            if (!std::isfinite(v)) {
                throw Error(Errc::divergence, "non-finite parameter in epoch " + std::to_string(epoch));
            }
        }

        stats.loss = evaluate();
        if (stats.loss < result.best_loss) {
            result.best_loss = stats.loss;
            result.best_epoch = epoch;
            result.params = params;
        }
        logger().info("epoch {} loss {}", epoch, stats.loss);
        result.curve.push_back(stats);
        if (on_epoch) {
            on_epoch(stats);
        }
    }
    return result;
}

Gallery build_gallery(const ModelParams& params, std::span<const TrainingSample> samples) {
    Gallery g;
    for (const auto& s : samples) {
        const auto f = embed_final(params, s.windows);
        if (f.embedding.size() == 0 || degenerate_variance(f.embedding)) {
            logger().warn("sample {} has no usable embedding; left out of the gallery", s.sample_id);
            continue;
        }
        g.add({s.sample_id, s.label, f.embedding});
    }
    return g;
}

GradientCheckReport gradient_check(const ModelParams& params, std::span<const TrainingSample> samples,
                                   std::span<const TrainingPair> pairs, double eps,
                                   const std::set<std::string>& frozen, std::size_t per_segment, std::uint64_t seed) {
    if (!(eps >= 1e-7 && eps <= 1e-3)) {
        throw Error(Errc::invalid_argument, "finite-difference step must lie in [1e-7, 1e-3]");
    }
    ModelParams analytic(params.hyper());
    batch_loss(params, samples, pairs, &analytic);

    GradientCheckReport report;
    Rng rng(seed);
    ModelParams probe = params;
    for (const auto& seg : params.segments()) {
        auto g = analytic.segment_values(seg.name);
        if (frozen.contains(seg.name)) {
            std::fill(g.begin(), g.end(), 0.0);
            continue;
        }
        std::vector<std::size_t> idx(seg.size());
        std::iota(idx.begin(), idx.end(), 0);
        if (per_segment > 0 && idx.size() > per_segment) {
            rng.shuffle(idx.begin(), idx.end());
            idx.resize(per_segment);
            std::sort(idx.begin(), idx.end());
        }
        for (auto k : idx) {
            const auto pos = seg.offset + k;
            const double base = params.values()[pos];
            probe.values()[pos] = base + eps;
            const double up = batch_loss(probe, samples, pairs, nullptr);
            probe.values()[pos] = base - eps;
            const double down = batch_loss(probe, samples, pairs, nullptr);
            probe.values()[pos] = base;
            const double numeric = (up - down) / (2.0 * eps);
            const double err = std::abs(g[k] - numeric) / std::max(1.0, std::abs(g[k]));
            ++report.checked;
            if (err > report.max_rel_error || report.worst_segment.empty()) {
                report.max_rel_error = std::max(err, report.max_rel_error);
                report.worst_segment = seg.name;
                report.worst_index = k;
            }
        }
    }
    return report;
}

} // namespace mgdvd
