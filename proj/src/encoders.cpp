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
#include "mgdvd/encoders.hpp"

#include "mgdvd/error.hpp"
#include "mgdvd/logging.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>

namespace mgdvd {

namespace {

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

/// Member indices kept as representation rows, in neighbour-set order.
std::vector<std::size_t> kept_rows(const NeighborSet& neigh, int dim) {
    std::vector<std::size_t> idx(neigh.members.size());
    std::iota(idx.begin(), idx.end(), 0);
    const auto capacity = static_cast<std::size_t>(std::max(dim - 1, 0));
    if (idx.size() > capacity) {
        std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
            const auto& ma = neigh.members[a];
            const auto& mb = neigh.members[b];
            if (ma.order != mb.order) {
                return ma.order < mb.order;
            }
            if (ma.node.type != mb.node.type) {
                return rank(ma.node.type) < rank(mb.node.type);
            }
            return ma.node.id < mb.node.id;
        });
        idx.resize(capacity);
        std::sort(idx.begin(), idx.end());
    }
    return idx;
}

double activation(double x, bool linear) { return linear ? x : std::max(x, 0.0); }
double activation_grad(double x, bool linear) { return linear ? 1.0 : (x > 0.0 ? 1.0 : 0.0); }

Vector project(const Vector& fused, const ModelParams& params, ForwardCache* cache) {
    const auto& hp = params.hyper();
    if (hp.hidden_layer) {
        Vector pre = params.hidden_w() * fused + params.hidden_b();
        Vector act = pre.array().tanh().matrix();
        Vector out = params.output_w() * act + params.output_b();
        if (cache != nullptr) {
            cache->hidden_pre = std::move(pre);
            cache->hidden_act = std::move(act);
        }
        return out;
    }
    return params.output_w() * fused + params.output_b();
}

} // namespace

std::string_view to_string(EncoderKind kind) { return kind == EncoderKind::dwiue ? "dwiue" : "chgae"; }

EncoderKind select_encoder(double ratio, double gamma) {
    return ratio <= gamma ? EncoderKind::dwiue : EncoderKind::chgae;
}

Vector initial_state(const EntityRef& node, int dim) {
    Vector v = Vector::Zero(dim);
    const int type_dims = std::min(dim, static_cast<int>(kEntityTypeCount));
    v[static_cast<Eigen::Index>(rank(node.type) % static_cast<std::size_t>(type_dims))] = 1.0;
    const int hash_dims = dim - type_dims;
    if (hash_dims > 0) {
        Vector h = Vector::Zero(hash_dims);
        const std::string padded = "^" + node.id + "$";
        for (std::size_t i = 0; i + 3 <= padded.size(); ++i) {
            const auto code = fnv1a(std::string_view(padded).substr(i, 3));
            h[static_cast<Eigen::Index>(code % static_cast<std::uint64_t>(hash_dims))] += 1.0;
        }
        const double norm = h.norm();
        if (norm > 0.0) {
            v.tail(hash_dims) = h / norm;
        }
    }
    return v / v.norm();
}

const Vector& StateStore::state(const EntityRef& node) {
    auto it = states_.find(node);
    if (it != states_.end()) {
        return it->second;
    }
    if (!auto_init_) {
        throw Error(Errc::missing_node_state, format_entity(node));
    }
    return states_.emplace(node, initial_state(node, dim_)).first->second;
}

void StateStore::set(const EntityRef& node, Vector v) {
    if (v.size() != dim_) {
        throw Error(Errc::length_mismatch, "state of " + format_entity(node));
    }
    states_[node] = std::move(v);
}

RepresentationMatrix build_representation_matrix(const Vector* prior_row, const NeighborSet& neigh,
                                                 StateStore& states, int dim) {
    RepresentationMatrix m;
    m.rows.reserve(static_cast<std::size_t>(dim));
    if (prior_row != nullptr) {
        if (prior_row->size() != dim) {
            throw Error(Errc::length_mismatch, "prior row");
        }
        m.rows.push_back(*prior_row);
    } else {
        m.rows.push_back(Vector::Zero(dim));
    }
    const auto keep = kept_rows(neigh, dim);
    m.dropped = neigh.members.size() - keep.size();
    if (m.dropped > 0) {
        logger().debug("meta-graph {}: {} neighbours beyond the {}-row limit dropped", neigh.metagraph_id, m.dropped,
                       dim);
    }
    for (auto i : keep) {
        const auto& node = neigh.members[i].node;
        const auto& s = states.state(node);
        if (s.size() != dim) {
            throw Error(Errc::length_mismatch, "state of " + format_entity(node));
        }
        m.rows.push_back(s);
        m.row_nodes.push_back(node);
    }
    while (m.rows.size() < static_cast<std::size_t>(dim)) {
        m.rows.push_back(Vector::Zero(dim));
    }
    return m;
}

Vector pool_rows(const RepresentationMatrix& m) {
    Vector acc = Vector::Zero(m.rows.front().size());
    for (const auto& r : m.rows) {
        acc += r;
    }
    return acc / static_cast<double>(m.rows.size());
}

std::vector<double> softmax(std::span<const double> logits) {
    std::vector<double> out(logits.size());
    if (logits.empty()) {
        return out;
    }
    const double peak = *std::max_element(logits.begin(), logits.end());
    double total = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - peak);
        total += out[i];
    }
    for (auto& v : out) {
        v /= total;
    }
    return out;
}

double leaky_relu(double x, double slope) { return x > 0.0 ? x : slope * x; }

std::vector<double> attention_scores(std::span<const Vector> reps, const ModelParams& params) {
    if (reps.empty()) {
        throw Error(Errc::length_mismatch, "attention needs at least one representation");
    }
    const auto d = params.hyper().rep_dim;
    Vector context = Vector::Zero(d);
    for (const auto& r : reps) {
        if (r.size() != d) {
            throw Error(Errc::length_mismatch, "representation length");
        }
        context += r;
    }
    context /= static_cast<double>(reps.size());
    const auto w = params.attention_w();
    const double ctx_score = w.tail(d).dot(context) + params.attention_b();
    std::vector<double> scores;
    scores.reserve(reps.size());
    for (const auto& r : reps) {
        scores.push_back(w.head(d).dot(r) + ctx_score);
    }
    return scores;
}

std::vector<double> metagraph_attention(std::span<const Vector> reps, const ModelParams& params) {
    auto scores = attention_scores(reps, params);
    for (auto& s : scores) {
        s = leaky_relu(s, params.hyper().leaky_slope);
    }
    return softmax(scores);
}

Vector fuse_graph_embedding(std::span<const Vector> reps, std::span<const double> weights,
                            const ModelParams& params) {
    if (reps.size() != weights.size() || reps.empty()) {
        throw Error(Errc::length_mismatch, "fusion needs one weight per representation");
    }
    Vector fused = Vector::Zero(params.hyper().rep_dim);
    for (std::size_t i = 0; i < reps.size(); ++i) {
        fused += weights[i] * reps[i];
    }
    return project(fused, params, nullptr);
}

std::vector<double> chgae_neighbor_weights(const NeighborSet& neigh) {
    if (neigh.members.empty()) {
        throw Error(Errc::empty_neighbor_set, "meta-graph " + std::to_string(neigh.metagraph_id));
    }
    std::array<std::size_t, kEntityTypeCount> per_type{};
    for (const auto& m : neigh.members) {
        ++per_type[rank(m.node.type)];
    }
    const auto n = static_cast<double>(neigh.members.size());
    std::vector<double> logits;
    logits.reserve(neigh.members.size());
    for (const auto& m : neigh.members) {
        logits.push_back(static_cast<double>(per_type[rank(m.node.type)]) / (n * static_cast<double>(m.order)));
    }
    return softmax(logits);
}

double chgae_neighbor_weight(const NeighborSet& neigh, std::size_t member) {
    auto alpha = chgae_neighbor_weights(neigh);
    return alpha.at(member);
}

NeighborMessages neighbor_messages(const NeighborSet& neigh, const NodeSet& delta, StateStore& states) {
    const int d = states.dim();
    NeighborMessages msg{Vector::Zero(d), Vector::Zero(d)};
    if (neigh.members.empty()) {
        return msg;
    }
    const auto alpha = chgae_neighbor_weights(neigh);
    for (std::size_t i = 0; i < neigh.members.size(); ++i) {
        const auto& node = neigh.members[i].node;
        Vector term = alpha[i] * states.state(node);
        msg.all += term;
        if (delta.contains(node)) {
            msg.dynamic += term;
        }
    }
    return msg;
}

Vector chgae_aggregate(const Vector& target_state, const NeighborMessages& messages, const ModelParams& params,
                       AggregatorTrace* trace) {
    const auto& hp = params.hyper();
    if (target_state.size() != hp.rep_dim) {
        throw Error(Errc::length_mismatch, "target state");
    }
    Vector h = target_state;
    for (int k = 1; k <= hp.layers; ++k) {
        const Vector& message = k < hp.layers ? messages.dynamic : messages.all;
        Vector pre = (1.0 + params.aggregator_eps(k)) * h + params.aggregator_w(k) * message;
        if (trace != nullptr) {
            trace->inputs.push_back(h);
            trace->preactivations.push_back(pre);
        }
        h = pre.unaryExpr([&](double x) { return activation(x, hp.linear); });
    }
    return h;
}

WindowInput prepare_window_input(EncoderKind kind, const EntityRef& target, std::span<const NeighborSet> neighbors,
                                 const NodeSet& delta, StateStore& states, int dim) {
    WindowInput input;
    input.kind = kind;
    input.target_state = states.state(target);
    input.metagraphs.reserve(neighbors.size());
    for (const auto& neigh : neighbors) {
        MetagraphInput mg;
        mg.metagraph_id = neigh.metagraph_id;
        if (kind == EncoderKind::dwiue) {
            mg.neighbor_rows_sum = Vector::Zero(dim);
            const auto keep = kept_rows(neigh, dim);
            for (auto i : keep) {
                mg.neighbor_rows_sum += states.state(neigh.members[i].node);
            }
            mg.kept_rows = keep.size();
            mg.dropped_rows = neigh.members.size() - keep.size();
        } else {
            mg.messages = neighbor_messages(neigh, delta, states);
        }
        input.metagraphs.push_back(std::move(mg));
    }
    return input;
}

Vector encode_window(const ModelParams& params, const WindowInput& input, const Vector& prior, ForwardCache* cache) {
    const auto& hp = params.hyper();
    const int d = hp.rep_dim;
    if (input.metagraphs.empty()) {
        throw Error(Errc::length_mismatch, "window input has no meta-graphs");
    }
    ForwardCache local;
    ForwardCache& c = cache != nullptr ? *cache : local;
    c = ForwardCache{};
    c.prior = prior.size() == 0 ? Vector::Zero(hp.embed_dim) : prior;
    if (c.prior.size() != hp.embed_dim) {
        throw Error(Errc::length_mismatch, "prior embedding");
    }

    if (input.kind == EncoderKind::dwiue) {
        c.prior_row = params.prior_proj() * c.prior;
        for (const auto& mg : input.metagraphs) {
            c.reps.push_back((c.prior_row + mg.neighbor_rows_sum) / static_cast<double>(d));
        }
    } else {
        for (const auto& mg : input.metagraphs) {
            AggregatorTrace trace;
            c.reps.push_back(chgae_aggregate(input.target_state, mg.messages, params, &trace));
            c.traces.push_back(std::move(trace));
        }
    }

    const auto m = static_cast<double>(c.reps.size());
    c.context = Vector::Zero(d);
    for (const auto& r : c.reps) {
        c.context += r;
    }
    c.context /= m;
    const auto w = params.attention_w();
    const double ctx_score = w.tail(d).dot(c.context) + params.attention_b();
    std::vector<double> logits;
    for (const auto& r : c.reps) {
        c.scores.push_back(w.head(d).dot(r) + ctx_score);
        logits.push_back(leaky_relu(c.scores.back(), hp.leaky_slope));
    }
    c.theta = softmax(logits);
    c.fused = Vector::Zero(d);
    for (std::size_t i = 0; i < c.reps.size(); ++i) {
        c.fused += c.theta[i] * c.reps[i];
    }
    c.embedding = project(c.fused, params, &c);
    return c.embedding;
}

void backward_window(const ModelParams& params, const WindowInput& input, const ForwardCache& c,
                     const Vector& grad_embedding, ModelParams& grad, Vector* grad_prior) {
    const auto& hp = params.hyper();
    const int d = hp.rep_dim;
    const std::size_t count = c.reps.size();

    Vector g_fused;
    if (hp.hidden_layer) {
        grad.output_w() += grad_embedding * c.hidden_act.transpose();
        grad.output_b() += grad_embedding;
        Vector g_act = params.output_w().transpose() * grad_embedding;
        Vector g_pre = g_act.array() * (1.0 - c.hidden_act.array().square());
        grad.hidden_w() += g_pre * c.fused.transpose();
        grad.hidden_b() += g_pre;
        g_fused = params.hidden_w().transpose() * g_pre;
    } else {
        grad.output_w() += grad_embedding * c.fused.transpose();
        grad.output_b() += grad_embedding;
        g_fused = params.output_w().transpose() * grad_embedding;
    }

    std::vector<Vector> g_reps(count);
    std::vector<double> g_theta(count);
    double weighted = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
        g_reps[i] = c.theta[i] * g_fused;
        g_theta[i] = c.reps[i].dot(g_fused);
        weighted += c.theta[i] * g_theta[i];
    }
    const auto w = params.attention_w();
    auto gw = grad.attention_w();
    Vector g_context = Vector::Zero(d);
    for (std::size_t i = 0; i < count; ++i) {
        const double g_logit = c.theta[i] * (g_theta[i] - weighted);
        const double g_score = g_logit * (c.scores[i] > 0.0 ? 1.0 : hp.leaky_slope);
        gw.head(d) += g_score * c.reps[i];
        gw.tail(d) += g_score * c.context;
        grad.attention_b() += g_score;
        g_reps[i] += g_score * w.head(d);
        g_context += g_score * w.tail(d);
    }
    g_context /= static_cast<double>(count);
    for (auto& g : g_reps) {
        g += g_context;
    }

    if (input.kind == EncoderKind::dwiue) {
        Vector g_prior_row = Vector::Zero(d);
        for (const auto& g : g_reps) {
            g_prior_row += g;
        }
        g_prior_row /= static_cast<double>(d);
        grad.prior_proj() += g_prior_row * c.prior.transpose();
        if (grad_prior != nullptr) {
            *grad_prior = params.prior_proj().transpose() * g_prior_row;
        }
        return;
    }
    if (grad_prior != nullptr) {
        *grad_prior = Vector::Zero(c.prior.size());
    }

    for (std::size_t i = 0; i < count; ++i) {
        const auto& trace = c.traces[i];
        const auto& msg = input.metagraphs[i].messages;
        Vector g_h = g_reps[i];
        for (int k = hp.layers; k >= 1; --k) {
            const auto& pre = trace.preactivations[static_cast<std::size_t>(k - 1)];
            const auto& h_in = trace.inputs[static_cast<std::size_t>(k - 1)];
            Vector g_pre = g_h.array() * pre.unaryExpr([&](double x) { return activation_grad(x, hp.linear); }).array();
            grad.aggregator_eps(k) += g_pre.dot(h_in);
            const Vector& message = k < hp.layers ? msg.dynamic : msg.all;
            grad.aggregator_w(k) += g_pre * message.transpose();
            g_h = (1.0 + params.aggregator_eps(k)) * g_pre;
        }
    }
}

double kink_margin(const ForwardCache& cache) {
    double margin = std::numeric_limits<double>::infinity();
    for (double s : cache.scores) {
        if (s != 0.0) {
            margin = std::min(margin, std::abs(s));
        }
    }
    for (const auto& trace : cache.traces) {
        for (const auto& pre : trace.preactivations) {
            for (Eigen::Index i = 0; i < pre.size(); ++i) {
                if (pre[i] != 0.0) {
                    margin = std::min(margin, std::abs(pre[i]));
                }
            }
        }
    }
    return margin;
}

Vector dwiue_encode(const Vector& prior, std::span<const NeighborSet> dynamic_neighbors, StateStore& states,
                    const ModelParams& params) {
    const auto& hp = params.hyper();
    const Vector prior_in = prior.size() == 0 ? Vector::Zero(hp.embed_dim) : prior;
    const Vector prior_row = params.prior_proj() * prior_in;
    std::vector<Vector> reps;
    for (const auto& neigh : dynamic_neighbors) {
        reps.push_back(pool_rows(build_representation_matrix(&prior_row, neigh, states, hp.rep_dim)));
    }
    const auto theta = metagraph_attention(reps, params);
    return fuse_graph_embedding(reps, theta, params);
}

Vector chgae_encode(const EntityRef& target, std::span<const NeighborSet> neighbors, const NodeSet& delta,
                    StateStore& states, const ModelParams& params) {
    const Vector target_state = states.state(target);
    std::vector<Vector> reps;
    for (const auto& neigh : neighbors) {
        reps.push_back(chgae_aggregate(target_state, neighbor_messages(neigh, delta, states), params));
    }
    const auto theta = metagraph_attention(reps, params);
    return fuse_graph_embedding(reps, theta, params);
}

} // namespace mgdvd
