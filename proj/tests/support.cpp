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
#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <filesystem>
#include <functional>

#include <unistd.h>

namespace mgdvd::support {

EntityRef proc(std::string id) { return {EntityType::process, std::move(id)}; }
EntityRef file(std::string id) { return {EntityType::file, std::move(id)}; }
EntityRef ent(EntityType t, std::string id) { return {t, std::move(id)}; }

Event make_event(double t, const EntityRef& src, std::string_view rel, const EntityRef& dst, std::string sample) {
    return {t, src, *default_schema().find_relation(rel), dst, std::move(sample)};
}

EdgeKey make_edge(const EntityRef& src, std::string_view rel, const EntityRef& dst) {
    return {src, *default_schema().find_relation(rel), dst};
}

namespace {

std::vector<EntityRef> random_pool(Rng& rng, std::size_t count) {
    std::vector<EntityRef> pool;
    for (std::size_t i = 0; i < count; ++i) {
        // roughly 40% processes so process-to-process patterns have endpoints
        const auto t = (i < 2 || rng.bernoulli(0.4)) ? EntityType::process
                                                     : kAllEntityTypes[1 + rng.below(kEntityTypeCount - 1)];
        pool.push_back({t, "n" + std::to_string(i)});
    }
    return pool;
}

std::optional<std::tuple<EntityRef, RelationId, EntityRef>> random_triple(Rng& rng, const std::vector<EntityRef>& pool) {
    const auto& schema = default_schema();
    const auto rel = static_cast<RelationId>(rng.below(schema.relation_count()));
    const auto& spec = schema.relation(rel);
    std::vector<const EntityRef*> srcs, dsts;
    for (const auto& e : pool) {
        if (e.type == spec.src) {
            srcs.push_back(&e);
        }
        if (e.type == spec.dst) {
            dsts.push_back(&e);
        }
    }
    if (srcs.empty() || dsts.empty()) {
        return std::nullopt;
    }
    return std::tuple{*srcs[rng.below(srcs.size())], rel, *dsts[rng.below(dsts.size())]};
}

} // namespace

std::vector<Event> random_stream(Rng& rng, std::size_t events, std::size_t max_nodes, double duration) {
    const auto pool = random_pool(rng, std::max<std::size_t>(max_nodes, 2));
    std::vector<double> times;
    for (std::size_t i = 0; i < events; ++i) {
        times.push_back(std::floor(rng.uniform(0.0, duration) * 10.0) / 10.0);
    }
    std::sort(times.begin(), times.end());
    std::vector<Event> out;
    for (double t : times) {
        std::optional<std::tuple<EntityRef, RelationId, EntityRef>> tr;
        while (!(tr = random_triple(rng, pool))) {
        }
        out.push_back({t, std::get<0>(*tr), std::get<1>(*tr), std::get<2>(*tr), "r"});
    }
    return out;
}

HeteroGraph random_graph(Rng& rng, std::size_t nodes, std::size_t edges) {
    const auto pool = random_pool(rng, nodes);
    HeteroGraph g;
    for (std::size_t i = 0; i < edges; ++i) {
        if (auto tr = random_triple(rng, pool)) {
            g.add_edge({std::get<0>(*tr), std::get<1>(*tr), std::get<2>(*tr)});
        }
    }
    return g;
}

std::map<EdgeTriple, std::uint32_t> window_edges(const std::vector<Event>& events, double start, double end) {
    std::map<EdgeTriple, std::uint32_t> out;
    for (const auto& e : events) {
        if (e.timestamp >= start && e.timestamp < end) {
            ++out[{e.src, e.rel, e.dst}];
        }
    }
    return out;
}

std::set<EntityRef> dynamic_nodes_reference(const std::map<EdgeTriple, std::uint32_t>& prev,
                                            const std::map<EdgeTriple, std::uint32_t>& cur, bool source_only) {
    std::set<EntityRef> out;
    auto mark = [&](const EdgeTriple& e) {
        out.insert(std::get<0>(e));
        if (!source_only) {
            out.insert(std::get<2>(e));
        }
    };
    for (const auto& [e, n] : prev) {
        if (!cur.contains(e)) {
            mark(e);
        }
    }
    for (const auto& [e, n] : cur) {
        if (!prev.contains(e)) {
            mark(e);
        }
    }
    return out;
}

std::map<EdgeTriple, std::uint32_t> graph_edges(const HeteroGraph& g) {
    std::map<EdgeTriple, std::uint32_t> out;
    for (const auto& [e, n] : g.edges()) {
        out[{e.src, e.rel, e.dst}] = n;
    }
    return out;
}

std::vector<std::vector<EntityRef>> homomorphisms_reference(const HeteroGraph& g, const MetaGraph& m,
                                                            const EntityRef& root) {
    std::vector<EntityRef> nodes;
    for (const auto& [n, c] : g.nodes()) {
        nodes.push_back(n);
    }
    std::set<EdgeTriple> edges;
    for (const auto& [e, c] : g.edges()) {
        edges.insert({e.src, e.rel, e.dst});
    }
    std::vector<std::vector<EntityRef>> out;
    std::vector<EntityRef> assign(m.size());
    std::function<void(std::size_t)> rec = [&](std::size_t j) {
        if (j == m.size()) {
            if (!(assign[m.source()] == root)) {
                return;
            }
            for (std::size_t k = 0; k < m.size(); ++k) {
                if (k != m.source() && assign[k] == root) {
                    return;
                }
                if (assign[k].type != m.types()[k]) {
                    return;
                }
            }
            for (const auto& pe : m.edges()) {
                const auto& a = pe.inverse ? assign[pe.to] : assign[pe.from];
                const auto& b = pe.inverse ? assign[pe.from] : assign[pe.to];
                if (!edges.contains({a, pe.rel, b})) {
                    return;
                }
            }
            out.push_back(assign);
            return;
        }
        for (const auto& n : nodes) {
            // type filtering here only prunes assignments the final check rejects
            if (n.type != m.types()[j]) {
                continue;
            }
            assign[j] = n;
            rec(j + 1);
        }
    };
    rec(0);
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<std::uint32_t> pattern_depth_reference(const MetaGraph& m) {
    std::vector<std::uint32_t> depth(m.size(), UINT32_MAX);
    std::deque<std::size_t> queue{m.source()};
    depth[m.source()] = 0;
    while (!queue.empty()) {
        auto u = queue.front();
        queue.pop_front();
        for (const auto& pe : m.edges()) {
            if (pe.from == u && depth[pe.to] == UINT32_MAX) {
                depth[pe.to] = depth[u] + 1;
                queue.push_back(pe.to);
            }
        }
    }
    return depth;
}

std::vector<NeighborMember> neighbors_reference(const HeteroGraph& g, const MetaGraph& m, const EntityRef& root,
                                                const std::set<EntityRef>* keep) {
    const auto depth = pattern_depth_reference(m);
    std::map<EntityRef, std::uint32_t> best;
    for (const auto& inst : homomorphisms_reference(g, m, root)) {
        for (std::size_t j = 0; j < inst.size(); ++j) {
            if (j == m.source()) {
                continue;
            }
            auto [it, fresh] = best.emplace(inst[j], depth[j]);
            if (!fresh) {
                it->second = std::min(it->second, depth[j]);
            }
        }
    }
    std::vector<NeighborMember> out;
    for (const auto& [n, d] : best) {
        if (keep == nullptr || keep->contains(n)) {
            out.push_back({n, d});
        }
    }
    std::sort(out.begin(), out.end(), [](const NeighborMember& a, const NeighborMember& b) {
        return std::tuple(rank(a.node.type), a.order, a.node.id) < std::tuple(rank(b.node.type), b.order, b.node.id);
    });
    return out;
}

std::vector<double> softmax_reference(const std::vector<double>& logits) {
    long double total = 0.0L;
    for (double x : logits) {
        total += std::exp(static_cast<long double>(x));
    }
    std::vector<double> out;
    for (double x : logits) {
        out.push_back(static_cast<double>(std::exp(static_cast<long double>(x)) / total));
    }
    return out;
}

double pearson_reference(const std::vector<double>& x, const std::vector<double>& y) {
    const auto n = static_cast<long double>(x.size());
    long double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    long double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    return static_cast<double>(sxy / std::sqrt(sxx * syy));
}

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

std::vector<double> neighbor_weights_reference(const std::vector<std::pair<EntityType, std::uint32_t>>& members) {
    std::vector<double> logits;
    const double n = static_cast<double>(members.size());
    for (const auto& [t, order] : members) {
        double same = 0;
        for (const auto& other : members) {
            same += other.first == t ? 1.0 : 0.0;
        }
        logits.push_back(same / (n * order));
    }
    return softmax_reference(logits);
}

std::vector<double> aggregate_reference(const std::vector<double>& target, const std::vector<ScalarMember>& members,
                                        const ModelParams& params) {
    const auto& hp = params.hyper();
    const auto d = static_cast<std::size_t>(hp.rep_dim);
    std::vector<std::pair<EntityType, std::uint32_t>> shape;
    for (const auto& m : members) {
        shape.emplace_back(m.type, m.order);
    }
    const auto alpha = members.empty() ? std::vector<double>{} : neighbor_weights_reference(shape);
    std::vector<double> msg_dyn(d, 0.0), msg_all(d, 0.0);
    for (std::size_t u = 0; u < members.size(); ++u) {
        for (std::size_t i = 0; i < d; ++i) {
            msg_all[i] += alpha[u] * members[u].state[i];
            if (members[u].dynamic) {
                msg_dyn[i] += alpha[u] * members[u].state[i];
            }
        }
    }
    const auto eps = params.segment_values("aggregator.eps");
    std::vector<double> h = target;
    for (int k = 1; k <= hp.layers; ++k) {
        const auto w = params.segment_values("aggregator.w" + std::to_string(k));
        const auto& msg = k < hp.layers ? msg_dyn : msg_all;
        std::vector<double> next(d);
        for (std::size_t r = 0; r < d; ++r) {
            double acc = (1.0 + eps[static_cast<std::size_t>(k - 1)]) * h[r];
            for (std::size_t c = 0; c < d; ++c) {
                acc += w[r * d + c] * msg[c];
            }
            next[r] = hp.linear ? acc : (acc > 0.0 ? acc : 0.0);
        }
        h = std::move(next);
    }
    return h;
}

std::vector<double> project_reference(const std::vector<double>& fused, const ModelParams& params) {
    const auto& hp = params.hyper();
    std::vector<double> input = fused;
    if (hp.hidden_layer) {
        const auto hw = params.segment_values("hidden.w");
        const auto hb = params.segment_values("hidden.b");
        std::vector<double> act(static_cast<std::size_t>(hp.hidden));
        for (std::size_t r = 0; r < act.size(); ++r) {
            double acc = hb[r];
            for (std::size_t c = 0; c < fused.size(); ++c) {
                acc += hw[r * fused.size() + c] * fused[c];
            }
            act[r] = std::tanh(acc);
        }
        input = std::move(act);
    }
    const auto ow = params.segment_values("output.w");
    const auto ob = params.segment_values("output.b");
    std::vector<double> out(static_cast<std::size_t>(hp.embed_dim));
    for (std::size_t r = 0; r < out.size(); ++r) {
        double acc = ob[r];
        for (std::size_t c = 0; c < input.size(); ++c) {
            acc += ow[r * input.size() + c] * input[c];
        }
        out[r] = acc;
    }
    return out;
}

std::vector<double> fuse_reference(const std::vector<std::vector<double>>& reps, const ModelParams& params,
                                   std::vector<double>* theta_out) {
    const auto& hp = params.hyper();
    const auto d = static_cast<std::size_t>(hp.rep_dim);
    const auto a = params.segment_values("attention.w");
    const double b = params.segment_values("attention.b")[0];
    std::vector<double> ctx(d, 0.0);
    for (const auto& r : reps) {
        for (std::size_t i = 0; i < d; ++i) {
            ctx[i] += r[i] / static_cast<double>(reps.size());
        }
    }
    std::vector<double> logits;
    for (const auto& r : reps) {
        double s = b;
        for (std::size_t i = 0; i < d; ++i) {
            s += a[i] * r[i] + a[d + i] * ctx[i];
        }
        logits.push_back(s > 0.0 ? s : hp.leaky_slope * s);
    }
    const auto theta = softmax_reference(logits);
    std::vector<double> fused(d, 0.0);
    for (std::size_t m = 0; m < reps.size(); ++m) {
        for (std::size_t i = 0; i < d; ++i) {
            fused[i] += theta[m] * reps[m][i];
        }
    }
    if (theta_out != nullptr) {
        *theta_out = theta;
    }
    return project_reference(fused, params);
}

std::vector<double> prior_row_reference(const std::vector<double>& prior, const ModelParams& params) {
    const auto d = static_cast<std::size_t>(params.hyper().rep_dim);
    const auto p = params.segment_values("prior.proj");
    std::vector<double> out(d, 0.0);
    for (std::size_t r = 0; r < d; ++r) {
        for (std::size_t c = 0; c < prior.size(); ++c) {
            out[r] += p[r * prior.size() + c] * prior[c];
        }
    }
    return out;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) {
        return INFINITY;
    }
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        m = std::max(m, std::abs(a[i] - b[i]));
    }
    return m;
}

double max_abs_diff(const Vector& a, const std::vector<double>& b) { return max_abs_diff(to_std(a), b); }

std::vector<TrainingSample> analysed_corpus(const std::vector<CorpusSample>& corpus, Split split,
                                            const PipelineConfig& cfg) {
    std::vector<TrainingSample> out;
    for (const auto& s : corpus) {
        if (s.split == split) {
            out.push_back({s.sample_id, s.label, analyze_stream(s.stream.events, cfg, default_catalog())});
        }
    }
    return out;
}

std::vector<double> numeric_gradient(const ModelParams& params, std::span<const TrainingSample> samples,
                                     std::span<const TrainingPair> pairs, double eps,
                                     const std::vector<std::size_t>& indices) {
    std::vector<double> out;
    ModelParams probe = params;
    for (auto i : indices) {
        const double keep = probe.values()[i];
        probe.values()[i] = keep + eps;
        const double up = batch_loss(probe, samples, pairs, nullptr);
        probe.values()[i] = keep - eps;
        const double down = batch_loss(probe, samples, pairs, nullptr);
        probe.values()[i] = keep;
        out.push_back((up - down) / (2.0 * eps));
    }
    return out;
}

double smallest_kink_margin(const ModelParams& params, std::span<const TrainingSample> samples) {
    double margin = INFINITY;
    for (const auto& s : samples) {
        Vector prior;
        for (const auto& w : s.windows) {
            ForwardCache cache;
            prior = encode_window(params, w.input, prior, &cache);
            margin = std::min(margin, kink_margin(cache));
        }
    }
    return margin;
}

std::string temp_dir(std::string_view tag) {
    namespace fs = std::filesystem;
    auto dir = fs::temp_directory_path() / ("mgdvd_" + std::string(tag) + "_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir.string();
}

} // namespace mgdvd::support
