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
#include "mgdvd/default_data.hpp"
#include "mgdvd/error.hpp"
#include "mgdvd/logging.hpp"
#include "mgdvd/text.hpp"
#include "mgdvd/workflow.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <iostream>
#include <optional>
#include <string>
#include <vector>

using namespace mgdvd;

namespace {

struct Common {
    std::string schema_path;
    std::string catalog_path;
    double window{60.0};
    double step{30.0};
    std::optional<double> gamma;
    std::string mode{"auto"};
};

struct Resources {
    NetworkSchema schema;
    Catalog catalog;
};

Resources load_resources(const Common& c) {
    Resources r{default_schema(), Catalog{}};
    if (!c.schema_path.empty()) {
        r.schema = load_schema(c.schema_path);
    }
    r.catalog = c.catalog_path.empty() && c.schema_path.empty() ? default_catalog()
                : c.catalog_path.empty()                         ? parse_catalog(data::kCatalogText, r.schema)
                                                                 : load_catalog(c.catalog_path, r.schema);
    return r;
}

PipelineConfig pipeline_config(const Common& c, double fallback_gamma, int rep_dim) {
    PipelineConfig p;
    p.window = {c.window, c.step};
    p.window.validate();
    p.gamma = c.gamma.value_or(fallback_gamma);
    p.mode = parse_walk_mode(c.mode);
    p.rep_dim = rep_dim;
    return p;
}

void add_schema_options(CLI::App* app, Common& c) {
    app->add_option("--schema", c.schema_path, "Network schema file (default: built-in)");
    app->add_option("--catalog", c.catalog_path, "Meta-graph catalog file (default: built-in)");
}

void add_pipeline_options(CLI::App* app, Common& c) {
    add_schema_options(app, c);
    app->add_option("--window", c.window, "Window length in seconds")->capture_default_str();
    app->add_option("--step", c.step, "Window step in seconds")->capture_default_str();
    app->add_option("--gamma", c.gamma, "Churn threshold for encoder dispatch (default: 0.3 or the checkpoint's)");
    app->add_option("--mode", c.mode, "auto | dwiue | chgae | static-walk")->capture_default_str();
}

void emit(const std::string& out_path, const std::string& content) {
    if (out_path.empty()) {
        std::cout << content;
    } else {
        text::write_file(out_path, content);
    }
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    for (auto part : text::split(s, ',')) {
        auto t = text::trim(part);
        if (!t.empty()) {
            out.emplace_back(t);
        }
    }
    return out;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Dynamic malware variant detection over execution-event streams"};
    app.name("mgdvd");
    app.require_subcommand(1);
    app.set_version_flag("--version", "mgdvd 1.0.0");

    Common common;

    // gen
    auto* gen = app.add_subcommand("gen", "Generate a labelled synthetic corpus");
    std::string families_path;
    int count = 20;
    double duration = 300.0;
    std::uint64_t seed = 1;
    std::string out_path;
    gen->add_option("--families", families_path, "Family template file (default: built-in)");
    gen->add_option("--count", count, "Samples per family")->capture_default_str();
    gen->add_option("--duration", duration, "Stream length in seconds")->capture_default_str();
    gen->add_option("--seed", seed, "Random seed")->capture_default_str();
    gen->add_option("--out", out_path, "Output corpus directory")->required();
    add_schema_options(gen, common);

    // ingest
    auto* ingest = app.add_subcommand("ingest", "Window an event stream and report per-window graph statistics");
    std::string stream_path;
    std::string dump_path;
    ingest->add_option("--stream", stream_path, "Event file")->required();
    ingest->add_option("--out", out_path, "Write the summary here instead of stdout");
    ingest->add_option("--dump", dump_path, "Write per-window graph snapshots to this file");
    add_pipeline_options(ingest, common);

    // train
    auto* train_cmd = app.add_subcommand("train", "Train encoder parameters on a corpus");
    std::string data_dir;
    std::string checkpoint_path;
    std::string gallery_path;
    OptimizerConfig opt;
    ModelHyperparams hp;
    train_cmd->add_option("--data", data_dir, "Corpus directory (manifest.tsv)")->required();
    train_cmd->add_option("--epochs", opt.epochs, "Maximum epochs")->capture_default_str();
    train_cmd->add_option("--lr", opt.lr, "Learning rate")->capture_default_str();
    train_cmd->add_option("--batch", opt.batch_pairs, "Pairs per optimiser step")->capture_default_str();
    train_cmd->add_option("--pairs", opt.pair_budget, "Same-family pairs per epoch")->capture_default_str();
    train_cmd->add_option("--seed", opt.seed, "Random seed")->capture_default_str();
    train_cmd->add_option("--layers", hp.layers, "Aggregation layers")->capture_default_str();
    train_cmd->add_option("--dim", hp.rep_dim, "Representation dimension")->capture_default_str();
    train_cmd->add_option("--embed", hp.embed_dim, "Embedding size")->capture_default_str();
    train_cmd->add_option("--hidden", hp.hidden, "Hidden width (with --hidden-layer)")->capture_default_str();
    train_cmd->add_flag("--hidden-layer", hp.hidden_layer, "Insert a tanh hidden layer before the output");
    train_cmd->add_option("--out,--checkpoint", checkpoint_path, "Checkpoint to write")->required();
    train_cmd->add_option("--gallery", gallery_path, "Also write the training-split gallery here");
    add_pipeline_options(train_cmd, common);

    // detect
    auto* detect = app.add_subcommand("detect", "Classify a stream window by window");
    DetectorConfig dcfg;
    bool no_timing = false;
    detect->add_option("--stream", stream_path, "Event file")->required();
    detect->add_option("--checkpoint", checkpoint_path, "Checkpoint file")->required();
    detect->add_option("--gallery", gallery_path, "Gallery file")->required();
    detect->add_option("--tau", dcfg.tau, "Correlation threshold")->capture_default_str();
    detect->add_option("--consistency", dcfg.consistency, "Consecutive agreeing windows for a final verdict")
        ->capture_default_str();
    detect->add_flag("--keep-running", dcfg.keep_running, "Keep classifying after the first final verdict");
    detect->add_flag("--no-timing", no_timing, "Write 0 as latency (reproducible logs)");
    detect->add_option("--out", out_path, "Write the verdict log here instead of stdout");
    add_pipeline_options(detect, common);

    // bench
    auto* bench = app.add_subcommand("bench", "Compare walk modes on a corpus split");
    std::string modes = "auto,static-walk";
    std::string split_name = "test";
    int reps = 5;
    std::optional<double> bench_tau;
    bench->add_option("--data", data_dir, "Corpus directory (manifest.tsv)")->required();
    bench->add_option("--checkpoint", checkpoint_path, "Checkpoint file")->required();
    bench->add_option("--gallery", gallery_path, "Gallery file")->required();
    bench->add_option("--modes", modes, "Comma-separated walk modes")->capture_default_str();
    bench->add_option("--split", split_name, "Corpus split to run (train | val | test)")->capture_default_str();
    bench->add_option("--reps", reps, "Repetitions per mode (median reported)")->capture_default_str();
    bench->add_option("--tau", bench_tau, "Correlation threshold (default: calibrated on the val split)");
    bench->add_option("--consistency", dcfg.consistency, "Consecutive agreeing windows for a final verdict")
        ->capture_default_str();
    bench->add_option("--out", out_path, "Write the table here instead of stdout");
    add_pipeline_options(bench, common);

    // inspect
    auto* inspect = app.add_subcommand("inspect", "Per-family meta-graph attention table");
    std::size_t top_k = 3;
    inspect->add_option("--checkpoint", checkpoint_path, "Checkpoint file")->required();
    inspect->add_option("--data", data_dir, "Corpus directory (manifest.tsv)")->required();
    inspect->add_option("--split", split_name, "Corpus split to average over")->capture_default_str();
    inspect->add_option("--top-k", top_k, "Meta-graphs listed per family")->capture_default_str();
    inspect->add_option("--out", out_path, "Write the table here instead of stdout");
    add_pipeline_options(inspect, common);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (gen->parsed()) {
            const auto res = load_resources(common);
            const auto families = families_path.empty() ? parse_families(data::kFamiliesText, res.schema, res.catalog)
                                                        : load_families(families_path, res.schema, res.catalog);
            const auto corpus = generate_corpus(families, count, duration, seed, res.schema, res.catalog);
            write_corpus(out_path, corpus, res.schema);
            logger().info("wrote {} streams to {}", corpus.size(), out_path);
        } else if (ingest->parsed()) {
            const auto res = load_resources(common);
            const auto events = load_events(stream_path, res.schema);
            const auto cfg = pipeline_config(common, hp.gamma, hp.rep_dim);
            std::string table = "window\tnodes\tedges\tdynamic\tchurn\tencoder\n";
            std::string dump;
            StreamAnalyzer analyzer(cfg, res.catalog);
            DhgsEngine engine(cfg.window);
            auto drain = [&] {
                while (auto w = analyzer.next()) {
                    table += fmt::format("{}\t{}\t{}\t{}\t{:.4f}\t{}\n", w->index, w->node_count, w->edge_count,
                                         w->delta_count, w->churn, to_string(w->input.kind));
                }
                while (auto s = engine.advance()) {
                    dump += s->graph->dump(res.schema);
                }
            };
            for (const auto& e : events) {
                analyzer.push(e);
                engine.push(e);
                drain();
            }
            analyzer.finish();
            engine.finish();
            drain();
            emit(out_path, table);
            if (!dump_path.empty()) {
                text::write_file(dump_path, dump);
            }
        } else if (train_cmd->parsed()) {
            const auto res = load_resources(common);
            if (common.gamma) {
                hp.gamma = *common.gamma;
            }
            const auto cfg = pipeline_config(common, hp.gamma, hp.rep_dim);
            const auto streams = load_corpus(data_dir, Split::train, res.schema);
            const auto samples = analyze_corpus(streams, cfg, res.catalog);
            std::cout << "epoch\tloss\tpairs\tsteps\n";
            auto result = train(samples, opt, hp, [](const EpochStats& s) {
                std::cout << fmt::format("{}\t{:.6f}\t{}\t{}\n", s.epoch, s.loss, s.pairs, s.steps);
            });
            logger().info("initial loss {:.6f}, best {:.6f} at epoch {}", result.initial_loss, result.best_loss,
                          result.best_epoch);
            save_checkpoint(result.params, checkpoint_path);
            if (!gallery_path.empty()) {
                save_gallery(build_gallery(result.params, samples), gallery_path);
            }
        } else if (detect->parsed()) {
            const auto res = load_resources(common);
            const auto params = load_checkpoint(checkpoint_path);
            const auto gallery = load_gallery(gallery_path);
            const auto events = load_events(stream_path, res.schema);
            const auto cfg = pipeline_config(common, params.hyper().gamma, params.hyper().rep_dim);
            auto verdicts = stream_detect(events, params, gallery, dcfg, cfg, res.catalog);
            std::string log;
            for (auto& v : verdicts) {
                if (no_timing) {
                    v.latency_ms = 0.0;
                }
                log += format_verdict_line(v) + "\n";
            }
            emit(out_path, log);
        } else if (bench->parsed()) {
            const auto res = load_resources(common);
            const auto params = load_checkpoint(checkpoint_path);
            const auto gallery = load_gallery(gallery_path);
            const auto cfg = pipeline_config(common, params.hyper().gamma, params.hyper().rep_dim);
            std::vector<WalkMode> mode_list;
            for (const auto& m : split_list(modes)) {
                mode_list.push_back(parse_walk_mode(m));
            }
            const auto streams = load_corpus(data_dir, parse_split(split_name), res.schema);
            if (bench_tau) {
                dcfg.tau = *bench_tau;
            } else {
                PipelineConfig auto_cfg = cfg;
                auto_cfg.mode = WalkMode::automatic;
                const auto val = analyze_corpus(load_corpus(data_dir, Split::validation, res.schema), auto_cfg,
                                                res.catalog);
                if (!val.empty()) {
                    dcfg.tau = calibrate_tau(params, gallery, val, dcfg);
                }
            }
            dcfg.validate();
            std::vector<BenchRow> rows;
            if (!streams.empty()) {
                rows = run_bench(streams, mode_list, params, gallery, dcfg, cfg, res.catalog, reps);
            }
            const auto echo = fmt::format("# split={} window={} step={} gamma={} tau={:.2f} consistency={} reps={}\n",
                                          split_name, cfg.window.window, cfg.window.step, cfg.gamma, dcfg.tau,
                                          dcfg.consistency, reps);
            emit(out_path, echo + format_bench_table(rows));
        } else if (inspect->parsed()) {
            const auto res = load_resources(common);
            const auto params = load_checkpoint(checkpoint_path);
            const auto cfg = pipeline_config(common, params.hyper().gamma, params.hyper().rep_dim);
            const auto samples =
                analyze_corpus(load_corpus(data_dir, parse_split(split_name), res.schema), cfg, res.catalog);
            const auto rows = inspect_weights(params, samples, res.catalog);
            emit(out_path, format_weight_table(rows, res.catalog, top_k));
        }
    } catch (const Error& e) {
        std::cerr << "mgdvd: " << e.what() << "\n";
        return exit_code(e.code());
    } catch (const std::exception& e) {
        std::cerr << "mgdvd: internal error: " << e.what() << "\n";
        return 4;
    }
    return 0;
}
