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
#include "mgdvd/error.hpp"
#include "mgdvd/workflow.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <algorithm>

using namespace mgdvd;

namespace {

FamilyTemplate writer_family() {
    FamilyTemplate t;
    t.label = "writer";
    t.rates = {{"proc_open_file", 0.2}, {"proc_alloc_memory", 0.2}};
    t.motifs = {{1, 16}};
    t.pools[rank(EntityType::file)] = 4;
    t.variety = 2;
    t.rename = 0.1;
    t.dropout = 0.1;
    t.jitter = 1.0;
    t.seed = 606;
    return t;
}

struct Trained {
    std::vector<CorpusSample> corpus;
    std::vector<TrainingSample> train;
    std::vector<TrainingSample> test;
    ModelParams params;
    Gallery gallery;
    PipelineConfig cfg;
};

const Trained& trained() {
    static const Trained t = [] {
        Trained out;
        auto families = default_families();
        families.push_back(writer_family());
        out.corpus = generate_corpus(families, 10, 300, 12);
        out.train = support::analysed_corpus(out.corpus, Split::train, out.cfg);
        out.test = support::analysed_corpus(out.corpus, Split::test, out.cfg);
        OptimizerConfig opt;
        opt.epochs = 60;
        out.params = train(out.train, opt, ModelHyperparams{}).params;
        out.gallery = build_gallery(out.params, out.train);
        return out;
    }();
    return t;
}

std::vector<LabeledStream> labeled(Split split) {
    std::vector<LabeledStream> out;
    for (const auto& s : trained().corpus) {
        if (s.split == split) {
            out.push_back({s.sample_id, s.label, s.split, s.stream.events});
        }
    }
    return out;
}

} // namespace

TEST(WalkModes, Names) {
    for (auto m : {WalkMode::automatic, WalkMode::dwiue, WalkMode::chgae, WalkMode::static_walk}) {
        EXPECT_EQ(parse_walk_mode(to_string(m)), m);
    }
    EXPECT_EQ(to_string(WalkMode::static_walk), "static-walk");
    EXPECT_THROW(parse_walk_mode("fast"), Error);
}

TEST(Pipeline, TargetIsFirstProcessSource) {
    std::vector<Event> ev{support::make_event(0, support::proc("boot"), "proc_fork_proc", support::proc("x"))};
    EXPECT_EQ(target_process(ev), support::proc("boot"));
    EXPECT_FALSE(target_process(std::vector<Event>{}).has_value());
}

TEST(Pipeline, DispatchFollowsChurn) {
    const auto& s = trained().corpus.front().stream.events;
    PipelineConfig cfg;
    bool saw_dwiue = false, saw_chgae = false;
    for (const auto& w : analyze_stream(s, cfg, default_catalog())) {
        const auto expected = select_encoder(w.churn, cfg.gamma);
        if (w.node_count > 0) {
            EXPECT_EQ(w.input.kind, expected) << w.index;
        }
        saw_dwiue |= w.input.kind == EncoderKind::dwiue;
        saw_chgae |= w.input.kind == EncoderKind::chgae;
        EXPECT_EQ(w.input.metagraphs.size(), default_catalog().size());
    }
    EXPECT_TRUE(saw_dwiue);
    EXPECT_TRUE(saw_chgae);
}

TEST(PipelineProperty, StaticWalkEmbedsLikeDynamicWalk) {
    const auto& t = trained();
    PipelineConfig dyn, stat;
    stat.mode = WalkMode::static_walk;
    for (std::size_t i = 0; i < t.corpus.size(); i += 5) {
        const auto& ev = t.corpus[i].stream.events;
        auto a = embed_windows(t.params, analyze_stream(ev, dyn, default_catalog()));
        auto b = embed_windows(t.params, analyze_stream(ev, stat, default_catalog()));
        ASSERT_EQ(a.size(), b.size());
        for (std::size_t w = 0; w < a.size(); ++w) {
            EXPECT_EQ(a[w], b[w]) << t.corpus[i].sample_id << " window " << w;
        }
    }
}

TEST(PipelineProperty, StreamingMatchesBatchAnalysis) {
    const auto& ev = trained().corpus[3].stream.events;
    PipelineConfig cfg;
    auto batch = analyze_stream(ev, cfg, default_catalog());
    StreamAnalyzer online(cfg, default_catalog());
    std::vector<WindowAnalysis> streamed;
    for (const auto& e : ev) {
        online.push(e);
        while (auto w = online.next()) {
            streamed.push_back(*w);
        }
    }
    online.finish();
    while (auto w = online.next()) {
        streamed.push_back(*w);
    }
    ASSERT_EQ(streamed.size(), batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
        EXPECT_EQ(streamed[i].delta_count, batch[i].delta_count);
        EXPECT_EQ(streamed[i].input.target_state, batch[i].input.target_state);
    }
}

TEST(Detect, EmptyStreamEmptyLog) {
    const auto& t = trained();
    EXPECT_TRUE(stream_detect(std::vector<Event>{}, t.params, t.gallery, {}, t.cfg, default_catalog()).empty());
}

TEST(Detect, FamilyStreamsReachTheirLabelQuickly) {
    const auto& t = trained();
    for (const auto& s : t.corpus) {
        if (s.split != Split::test) {
            continue;
        }
        auto log = stream_detect(s.stream.events, t.params, t.gallery, {}, t.cfg, default_catalog());
        ASSERT_FALSE(log.empty());
        const auto final_at = std::find_if(log.begin(), log.end(),
                                           [](const Verdict& v) { return v.status == VerdictStatus::final; });
        ASSERT_NE(final_at, log.end()) << s.sample_id;
        EXPECT_EQ(final_at->label, s.label) << s.sample_id;
        EXPECT_LE(final_at->window, 3u) << s.sample_id;
        EXPECT_EQ(&log.back(), &*final_at);
        for (const auto& v : log) {
            EXPECT_GE(v.latency_ms, 0.0);
        }
    }
}

TEST(Detect, KeepRunningCoversEveryWindow) {
    const auto& t = trained();
    const auto& s = t.corpus.back();
    DetectorConfig cfg;
    cfg.keep_running = true;
    auto log = stream_detect(s.stream.events, t.params, t.gallery, cfg, t.cfg, default_catalog());
    EXPECT_EQ(log.size(), window_count(s.stream.events, t.cfg.window));
}

TEST(Workflow, MacroF1) {
    std::vector<std::string> truth{"a", "a", "b", "b"};
    EXPECT_DOUBLE_EQ(macro_f1(truth, truth), 1.0);
    std::vector<std::string> pred{"a", "b", "b", ""};
    // a: p=1 r=.5 f=2/3; b: p=.5 r=.5 f=.5
    EXPECT_NEAR(macro_f1(truth, pred), (2.0 / 3.0 + 0.5) / 2.0, 1e-15);
}

TEST(Workflow, CalibratedThresholdKeepsValidationAccuracy) {
    const auto& t = trained();
    auto val = support::analysed_corpus(t.corpus, Split::validation, t.cfg);
    const double tau = calibrate_tau(t.params, t.gallery, val, {});
    EXPECT_GE(tau, 0.0);
    EXPECT_LE(tau, 0.99);
}

TEST(Bench, SingleModeSingleRow) {
    const auto& t = trained();
    auto streams = labeled(Split::test);
    std::vector<WalkMode> modes{WalkMode::automatic};
    auto rows = run_bench(streams, modes, t.params, t.gallery, {}, t.cfg, default_catalog(), 1);
    ASSERT_EQ(rows.size(), 1u);
    EXPECT_EQ(rows[0].streams, streams.size());
    EXPECT_GT(rows[0].windows, 0u);
    EXPECT_GE(rows[0].total_ms, 0.0);
    EXPECT_DOUBLE_EQ(rows[0].accuracy, 1.0);
    const auto table = format_bench_table(rows);
    EXPECT_EQ(std::count(table.begin(), table.end(), '\n'), 2);
}

TEST(Bench, EmptyCorpusEmptyTable) {
    const auto& t = trained();
    std::vector<WalkMode> modes{WalkMode::automatic, WalkMode::static_walk};
    auto rows = run_bench(std::vector<LabeledStream>{}, modes, t.params, t.gallery, {}, t.cfg, default_catalog(), 5);
    for (const auto& r : rows) {
        EXPECT_EQ(r.windows, 0u);
    }
    EXPECT_NO_THROW(format_bench_table(std::vector<BenchRow>{}));
}

TEST(Inspect, RowsAreDistributions) {
    const auto& t = trained();
    auto rows = inspect_weights(t.params, t.test, default_catalog());
    ASSERT_EQ(rows.size(), 6u);
    for (const auto& r : rows) {
        ASSERT_EQ(r.theta.size(), 14u);
        double sum = 0.0;
        for (double x : r.theta) {
            sum += x;
        }
        EXPECT_NEAR(sum, 1.0, 1e-9) << r.label;
    }
    const auto table = format_weight_table(rows, default_catalog(), 3);
    EXPECT_NE(table.find("M14"), std::string::npos);
}

TEST(Inspect, PlantedMotifRanksHigh) {
    const auto& t = trained();
    for (const auto& r : inspect_weights(t.params, t.test, default_catalog())) {
        if (r.label == "writer") {
            auto ranked = ranked_metagraphs(r, default_catalog());
            ranked.resize(3);
            EXPECT_NE(std::find(ranked.begin(), ranked.end(), 1), ranked.end());
        }
    }
}

TEST(Inspect, UntrainedWeightsAreNearUniform) {
    const auto& t = trained();
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        auto p = ModelParams::initialize(ModelHyperparams{}, seed);
        for (const auto& r : inspect_weights(p, t.test, default_catalog())) {
            const auto [lo, hi] = std::minmax_element(r.theta.begin(), r.theta.end());
            EXPECT_LT(*hi / *lo, 3.0) << r.label << " seed " << seed;
        }
    }
}
