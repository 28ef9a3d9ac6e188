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
#include "mgdvd/pipeline.hpp"

#include "mgdvd/error.hpp"
#include "mgdvd/text.hpp"

#include <algorithm>

namespace mgdvd {

std::string_view to_string(WalkMode mode) {
    switch (mode) {
    case WalkMode::automatic:
        return "auto";
    case WalkMode::dwiue:
        return "dwiue";
    case WalkMode::chgae:
        return "chgae";
    case WalkMode::static_walk:
        return "static-walk";
    }
    return "?";
}

WalkMode parse_walk_mode(std::string_view name) {
    for (auto m : {WalkMode::automatic, WalkMode::dwiue, WalkMode::chgae, WalkMode::static_walk}) {
        if (to_string(m) == name) {
            return m;
        }
    }
    throw Error(Errc::invalid_argument, "unknown mode '" + std::string(name) + "'");
}

std::optional<EntityRef> target_process(std::span<const Event> events) {
    for (const auto& e : events) {
        if (e.src.type == EntityType::process) {
            return e.src;
        }
    }
    return std::nullopt;
}

StreamAnalyzer::StreamAnalyzer(PipelineConfig cfg, const Catalog& catalog)
    : cfg_(cfg), catalog_(&catalog), states_(cfg.rep_dim), engine_(cfg.window, cfg.endpoints) {
    if (!(cfg_.gamma > 0.0 && cfg_.gamma < 1.0)) {
        throw Error(Errc::invalid_argument, "gamma must lie in (0, 1)");
    }
    if (cfg_.rep_dim < 1) {
        throw Error(Errc::invalid_argument, "representation dimension must be positive");
    }
}

void StreamAnalyzer::push(Event e) {
    if (!target_ && e.src.type == EntityType::process) {
        target_ = e.src;
    }
    if (cfg_.mode == WalkMode::static_walk) {
        if (finished_) {
            throw Error(Errc::invalid_argument, "push after finish");
        }
        if (!events_.empty() && e.timestamp < events_.back().timestamp) {
            throw Error(Errc::out_of_order_stream, "timestamp " + text::format_double(e.timestamp) + " after " +
                                                       text::format_double(events_.back().timestamp));
        }
        events_.push_back(std::move(e));
        return;
    }
    engine_.push(std::move(e));
}

void StreamAnalyzer::finish() {
    finished_ = true;
    engine_.finish();
}

std::optional<WindowAnalysis> StreamAnalyzer::next() {
    if (cfg_.mode == WalkMode::static_walk) {
        return next_static();
    }
    auto step = engine_.advance();
    if (!step) {
        return std::nullopt;
    }
    return analyze(step->index, *step->graph, step->delta);
}

std::optional<WindowAnalysis> StreamAnalyzer::next_static() {
    if (events_.empty()) {
        return std::nullopt;
    }
    const double last = events_.back().timestamp;
    const auto& w = cfg_.window;
    if (finished_ && next_static_ > 0 && w.end(next_static_ - 1) > last) {
        return std::nullopt;
    }
    if (!finished_ && last < w.end(next_static_)) {
        return std::nullopt;
    }
    const std::size_t t = next_static_++;
    HeteroGraph cur = build_window_graph(events_, w, t);
    NodeSet delta = compute_dynamic_nodes(prev_, cur, cfg_.endpoints);
    auto result = analyze(t, cur, delta);
    prev_ = std::move(cur);
    return result;
}

WindowAnalysis StreamAnalyzer::analyze(std::size_t index, const HeteroGraph& g, const NodeSet& delta) {
    WindowAnalysis a;
    a.index = index;
    a.node_count = g.node_count();
    a.edge_count = g.edge_count();
    a.delta_count = static_cast<std::size_t>(
        std::count_if(delta.begin(), delta.end(), [&](const EntityRef& n) { return g.has_node(n); }));
    a.churn = g.empty() ? 0.0 : churn_ratio(delta, g);

    EncoderKind kind = EncoderKind::dwiue;
    switch (cfg_.mode) {
    case WalkMode::automatic:
    case WalkMode::static_walk:
        kind = g.empty() ? EncoderKind::dwiue : select_encoder(a.churn, cfg_.gamma);
        break;
    case WalkMode::dwiue:
        kind = EncoderKind::dwiue;
        break;
    case WalkMode::chgae:
        kind = EncoderKind::chgae;
        break;
    }

    const auto& metagraphs = catalog_->metagraphs();
    const EntityRef target = target_.value_or(EntityRef{EntityType::process, ""});
    std::vector<NeighborSet> neighbors(metagraphs.size());
    for (std::size_t i = 0; i < metagraphs.size(); ++i) {
        neighbors[i].target = target;
        neighbors[i].metagraph_id = metagraphs[i].id();
    }

    const bool restrict = kind == EncoderKind::dwiue;
    const bool nothing_dynamic = restrict && a.delta_count == 0 && cfg_.mode != WalkMode::static_walk;
    if (target_ && g.has_node(target) && !nothing_dynamic) {
        const AdjacencyView view(g);
        if (cfg_.mode == WalkMode::static_walk) {
            for (auto p : view.nodes_of_type(EntityType::process)) {
                const auto& root = view.node(p);
                for (std::size_t i = 0; i < metagraphs.size(); ++i) {
                    auto full = neighbor_set(view, metagraphs[i], root);
                    if (root == target) {
                        neighbors[i] = std::move(full);
                    }
                }
            }
            if (restrict) {
                for (auto& ns : neighbors) {
                    std::erase_if(ns.members, [&](const NeighborMember& m) { return !delta.contains(m.node); });
                }
            }
        } else {
            for (std::size_t i = 0; i < metagraphs.size(); ++i) {
                neighbors[i] = neighbor_set(view, metagraphs[i], target, restrict ? &delta : nullptr);
            }
        }
    }

    a.input = prepare_window_input(kind, target, neighbors, delta, states_, cfg_.rep_dim);
    return a;
}

std::vector<WindowAnalysis> analyze_stream(std::span<const Event> events, const PipelineConfig& cfg,
                                           const Catalog& catalog) {
    StreamAnalyzer analyzer(cfg, catalog);
    std::vector<WindowAnalysis> out;
    for (const auto& e : events) {
        analyzer.push(e);
        while (auto w = analyzer.next()) {
            out.push_back(std::move(*w));
        }
    }
    analyzer.finish();
    while (auto w = analyzer.next()) {
        out.push_back(std::move(*w));
    }
    return out;
}

std::vector<Vector> embed_windows(const ModelParams& params, std::span<const WindowAnalysis> windows) {
    std::vector<Vector> out;
    out.reserve(windows.size());
    Vector prior = Vector::Zero(params.hyper().embed_dim);
    for (const auto& w : windows) {
        prior = encode_window(params, w.input, prior);
        out.push_back(prior);
    }
    return out;
}

FinalWindow embed_final(const ModelParams& params, std::span<const WindowAnalysis> windows) {
    FinalWindow f;
    if (windows.empty()) {
        return f;
    }
    f.prior = Vector::Zero(params.hyper().embed_dim);
    for (std::size_t i = 0; i + 1 < windows.size(); ++i) {
        f.prior = encode_window(params, windows[i].input, f.prior);
    }
    f.embedding = encode_window(params, windows.back().input, f.prior);
    return f;
}

} // namespace mgdvd
