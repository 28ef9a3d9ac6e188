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
#include "mgdvd/workflow.hpp"

#include "mgdvd/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <map>
#include <set>

namespace mgdvd {

std::vector<LabeledStream> load_corpus(const std::string& dir, std::optional<Split> split,
                                       const NetworkSchema& schema) {
    std::vector<LabeledStream> out;
    for (const auto& e : load_manifest(dir)) {
        if (split && e.split != *split) {
            continue;
        }
        out.push_back({e.sample_id, e.label, e.split,
                       load_events((std::filesystem::path(dir) / e.path).string(), schema)});
    }
    return out;
}

std::vector<TrainingSample> analyze_corpus(std::span<const LabeledStream> streams, const PipelineConfig& cfg,
                                           const Catalog& catalog) {
    std::vector<TrainingSample> out;
    out.reserve(streams.size());
    for (const auto& s : streams) {
        out.push_back({s.sample_id, s.label, analyze_stream(s.events, cfg, catalog)});
    }
    return out;
}

double macro_f1(std::span<const std::string> truth, std::span<const std::string> predicted) {
    if (truth.size() != predicted.size()) {
        throw Error(Errc::length_mismatch, "macro-F1 needs one prediction per stream");
    }
    const std::set<std::string> labels(truth.begin(), truth.end());
    if (labels.empty()) {
        return 0.0;
    }
    double sum = 0.0;
    for (const auto& label : labels) {
        std::size_t tp = 0;
        std::size_t fp = 0;
        std::size_t fn = 0;
        for (std::size_t i = 0; i < truth.size(); ++i) {
            const bool is = truth[i] == label;
            const bool said = predicted[i] == label;
            tp += is && said;
            fp += !is && said;
            fn += is && !said;
        }
        const auto denom = 2 * tp + fp + fn;
        sum += denom == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
    }
    return sum / static_cast<double>(labels.size());
}

double calibrate_tau(const ModelParams& params, const Gallery& gallery, std::span<const TrainingSample> streams,
                     const DetectorConfig& base) {
    std::vector<std::vector<Vector>> embeddings;
    std::vector<std::string> truth;
    for (const auto& s : streams) {
        embeddings.push_back(embed_windows(params, s.windows));
        truth.push_back(s.label);
    }
    std::vector<double> best_taus;
    double best_f1 = -1.0;
    for (int step = 0; step <= 99; ++step) {
        DetectorConfig cfg = base;
        cfg.tau = step / 100.0;
        cfg.keep_running = false;
        std::vector<std::string> predicted;
        for (std::size_t i = 0; i < streams.size(); ++i) {
            std::vector<Verdict> log;
            for (std::size_t t = 0; t < embeddings[i].size(); ++t) {
                log.push_back(classify_window(embeddings[i][t], gallery, cfg, log.empty() ? nullptr : &log.back(),
                                              streams[i].windows[t].index));
                if (log.back().status == VerdictStatus::final) {
                    break;
                }
            }
            predicted.push_back(decided_label(log));
        }
        const double f1 = macro_f1(truth, predicted);
        if (f1 > best_f1 + 1e-12) {
            best_f1 = f1;
            best_taus.clear();
        }
        if (std::abs(f1 - best_f1) <= 1e-12) {
            best_taus.push_back(cfg.tau);
        }
    }
    return best_taus[(best_taus.size() - 1) / 2];
}

std::vector<BenchRow> run_bench(std::span<const LabeledStream> streams, std::span<const WalkMode> modes,
                                const ModelParams& params, const Gallery& gallery, const DetectorConfig& detector,
                                const PipelineConfig& pipeline, const Catalog& catalog, int reps) {
    if (reps < 1) {
        throw Error(Errc::invalid_argument, "bench needs at least one repetition");
    }
    using Clock = std::chrono::steady_clock;
    DetectorConfig dcfg = detector;
    dcfg.keep_running = true;

    std::size_t low = 0;
    {
        PipelineConfig probe = pipeline;
        probe.mode = WalkMode::automatic;
        for (const auto& s : streams) {
            for (const auto& w : analyze_stream(s.events, probe, catalog)) {
                low += w.churn <= pipeline.gamma;
            }
        }
    }

    std::vector<BenchRow> rows(modes.size());
    for (int r = 0; r < reps; ++r) {
        for (std::size_t m = 0; m < modes.size(); ++m) {
            PipelineConfig cfg = pipeline;
            cfg.mode = modes[m];
            auto& row = rows[m];
            std::size_t windows = 0;
            std::size_t correct = 0;
            const auto t0 = Clock::now();
            for (const auto& s : streams) {
                const auto verdicts = stream_detect(s.events, params, gallery, dcfg, cfg, catalog);
                windows += verdicts.size();
                correct += decided_label(verdicts) == s.label;
            }
            row.rep_ms.push_back(std::chrono::duration<double, std::milli>(Clock::now() - t0).count());
            row.mode = modes[m];
            row.streams = streams.size();
            row.windows = windows;
            row.low_churn_windows = low;
            row.accuracy = streams.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(streams.size());
        }
    }
    for (auto& row : rows) {
        auto sorted = row.rep_ms;
        std::sort(sorted.begin(), sorted.end());
        const auto n = sorted.size();
        row.total_ms = n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
        row.per_window_ms = row.windows == 0 ? 0.0 : row.total_ms / static_cast<double>(row.windows);
    }
    return rows;
}

std::string format_bench_table(std::span<const BenchRow> rows) {
    std::string out = "mode\tstreams\twindows\tlow_churn_windows\ttotal_ms\tper_window_ms\taccuracy\tspeedup\n";
    const BenchRow* baseline = nullptr;
    for (const auto& r : rows) {
        if (r.mode == WalkMode::static_walk) {
            baseline = &r;
        }
    }
    for (const auto& r : rows) {
        std::string speedup = "-";
        if (baseline != nullptr && r.total_ms > 0.0) {
            speedup = fmt::format("{:.2f}", baseline->total_ms / r.total_ms);
        }
        out += fmt::format("{}\t{}\t{}\t{}\t{:.3f}\t{:.4f}\t{:.4f}\t{}\n", to_string(r.mode), r.streams, r.windows,
                           r.low_churn_windows, r.total_ms, r.per_window_ms, r.accuracy, speedup);
    }
    return out;
}

std::vector<FamilyWeights> inspect_weights(const ModelParams& params, std::span<const TrainingSample> samples,
                                           const Catalog& catalog) {
    std::vector<FamilyWeights> rows;
    std::map<std::string, std::size_t> index;
    for (const auto& s : samples) {
        auto [it, fresh] = index.try_emplace(s.label, rows.size());
        if (fresh) {
            rows.push_back({s.label, 0, std::vector<double>(catalog.size(), 0.0)});
        }
        auto& row = rows[it->second];
        Vector prior = Vector::Zero(params.hyper().embed_dim);
        for (const auto& w : s.windows) {
            ForwardCache cache;
            prior = encode_window(params, w.input, prior, &cache);
            if (cache.theta.size() != catalog.size()) {
                throw Error(Errc::length_mismatch, "window input does not cover the catalog");
            }
            for (std::size_t i = 0; i < cache.theta.size(); ++i) {
                row.theta[i] += cache.theta[i];
            }
            ++row.windows;
        }
    }
    for (auto& row : rows) {
        if (row.windows > 0) {
            for (auto& v : row.theta) {
                v /= static_cast<double>(row.windows);
            }
        }
    }
    return rows;
}

std::vector<int> ranked_metagraphs(const FamilyWeights& row, const Catalog& catalog) {
    std::vector<std::size_t> idx(row.theta.size());
    for (std::size_t i = 0; i < idx.size(); ++i) {
        idx[i] = i;
    }
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return row.theta[a] > row.theta[b]; });
    std::vector<int> out;
    for (auto i : idx) {
        out.push_back(catalog.metagraphs()[i].id());
    }
    return out;
}

std::string format_weight_table(std::span<const FamilyWeights> rows, const Catalog& catalog, std::size_t top_k) {
    std::string out = "family\twindows";
    for (const auto& m : catalog.metagraphs()) {
        out += fmt::format("\tM{}", m.id());
    }
    out += "\ttop\n";
    for (const auto& row : rows) {
        out += fmt::format("{}\t{}", row.label, row.windows);
        for (double v : row.theta) {
            out += fmt::format("\t{:.4f}", v);
        }
        const auto ranked = ranked_metagraphs(row, catalog);
        std::string top;
        for (std::size_t i = 0; i < std::min(top_k, ranked.size()); ++i) {
            top += fmt::format("{}M{}", i == 0 ? "" : ",", ranked[i]);
        }
        out += "\t" + (top.empty() ? std::string("-") : top) + "\n";
    }
    return out;
}

} // namespace mgdvd
