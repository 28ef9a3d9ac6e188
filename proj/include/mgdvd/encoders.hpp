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

#include "mgdvd/dhgs.hpp"
#include "mgdvd/metagraph.hpp"
#include "mgdvd/params.hpp"

#include <map>
#include <span>
#include <vector>

namespace mgdvd {

enum class EncoderKind { dwiue, chgae };

std::string_view to_string(EncoderKind kind);

/// DWIUE when the churn ratio is at most gamma, CHGAE otherwise.
EncoderKind select_encoder(double ratio, double gamma);

/// Deterministic label-free node state: one-hot entity type in the first 8
/// dimensions, hashed character-trigram counts of the id in the remaining
/// d - 8, each half unit-normalised, the whole vector unit-normalised.
Vector initial_state(const EntityRef& node, int dim);

/// Node -> state vector. With auto_init the store fills missing entries from
/// initial_state(); otherwise a missing node is Error(missing_node_state).
class StateStore {
public:
    explicit StateStore(int dim, bool auto_init = true) : dim_(dim), auto_init_(auto_init) {}

    const Vector& state(const EntityRef& node);
    void set(const EntityRef& node, Vector v);
    int dim() const { return dim_; }
    std::size_t size() const { return states_.size(); }

private:
    int dim_;
    bool auto_init_;
    std::map<EntityRef, Vector> states_;
};

/// Row 0 is the projected prior graph embedding (zeros when absent), rows 1..
/// are neighbour states in neighbour-set order; exactly `dim` rows.
struct RepresentationMatrix {
    std::vector<Vector> rows;
    std::vector<EntityRef> row_nodes; // nodes behind rows 1..n
    std::size_t dropped{0};           // neighbours cut by the d - 1 row limit
};

/// Keeps at most d - 1 neighbours, preferring lower order, then type rank,
/// then id, and emits them in the neighbour-set (type, order, id) order.
RepresentationMatrix build_representation_matrix(const Vector* prior_row, const NeighborSet& neigh,
                                                 StateStore& states, int dim);

/// Row-mean of the representation matrix.
Vector pool_rows(const RepresentationMatrix& m);

std::vector<double> softmax(std::span<const double> logits);
double leaky_relu(double x, double slope);

/// Pre-activation attention scores W_l [h_i, c] + b_l, c = mean of reps.
std::vector<double> attention_scores(std::span<const Vector> reps, const ModelParams& params);

/// θ_i = softmax_i LeakyReLU(W_l [h_i, c] + b_l).
std::vector<double> metagraph_attention(std::span<const Vector> reps, const ModelParams& params);

/// Projection of Σ θ_i h_i to the embedding size. Error(length_mismatch)
/// when the two spans differ in length.
Vector fuse_graph_embedding(std::span<const Vector> reps, std::span<const double> weights,
                            const ModelParams& params);

/// Type-frequency / order weights α_u over one neighbour set, in member order.
/// Error(empty_neighbor_set) on an empty set.
std::vector<double> chgae_neighbor_weights(const NeighborSet& neigh);
double chgae_neighbor_weight(const NeighborSet& neigh, std::size_t member);

/// Σ α_u s(u) over all members and over the members inside `delta`.
struct NeighborMessages {
    Vector dynamic;
    Vector all;
};
NeighborMessages neighbor_messages(const NeighborSet& neigh, const NodeSet& delta, StateStore& states);

/// Per-layer intermediate values of the layer-wise aggregator.
struct AggregatorTrace {
    std::vector<Vector> inputs;        // h^{k-1}
    std::vector<Vector> preactivations; // before σ
};

/// K layers of h^k = σ((1+ε_k) h^{k-1} + W_k m_k) starting at the target
/// state, where m_k is the dynamic message for k < K and the full message for
/// the last layer.
Vector chgae_aggregate(const Vector& target_state, const NeighborMessages& messages, const ModelParams& params,
                       AggregatorTrace* trace = nullptr);

/// Everything an encoder needs for one meta-graph, independent of parameters.
struct MetagraphInput {
    int metagraph_id{0};
    Vector neighbor_rows_sum; // DWIUE: sum of kept representation rows 1..n
    std::size_t kept_rows{0};
    std::size_t dropped_rows{0};
    NeighborMessages messages; // CHGAE
};

struct WindowInput {
    EncoderKind kind{EncoderKind::dwiue};
    Vector target_state;
    std::vector<MetagraphInput> metagraphs;
};

/// For DWIUE, `neighbors` must already be restricted to the dynamic nodes;
/// for CHGAE they are the full per-meta-graph neighbour sets.
WindowInput prepare_window_input(EncoderKind kind, const EntityRef& target, std::span<const NeighborSet> neighbors,
                                 const NodeSet& delta, StateStore& states, int dim);

struct ForwardCache {
    Vector prior;
    Vector prior_row;
    std::vector<Vector> reps;
    std::vector<AggregatorTrace> traces;
    Vector context;
    std::vector<double> scores;
    std::vector<double> theta;
    Vector fused;
    Vector hidden_pre;
    Vector hidden_act;
    Vector embedding;
};

/// Graph embedding for one window from its prepared input and the previous
/// window's embedding (zeros at the first window).
Vector encode_window(const ModelParams& params, const WindowInput& input, const Vector& prior,
                     ForwardCache* cache = nullptr);

/// Accumulates ∂L/∂params into `grad` given ∂L/∂embedding. When `grad_prior`
/// is given it receives ∂L/∂prior (zero for CHGAE windows).
void backward_window(const ModelParams& params, const WindowInput& input, const ForwardCache& cache,
                     const Vector& grad_embedding, ModelParams& grad, Vector* grad_prior = nullptr);

/// Smallest |pre-activation| over all non-zero ReLU / LeakyReLU inputs of a
/// forward pass; finite differences are reliable when this exceeds the step.
double kink_margin(const ForwardCache& cache);

/// DWIUE path: representation matrices over the dynamic neighbours, row-mean
/// pooling, meta-graph attention, fusion.
Vector dwiue_encode(const Vector& prior, std::span<const NeighborSet> dynamic_neighbors, StateStore& states,
                    const ModelParams& params);

/// CHGAE path: layer-wise aggregation per meta-graph, attention, fusion.
Vector chgae_encode(const EntityRef& target, std::span<const NeighborSet> neighbors, const NodeSet& delta,
                    StateStore& states, const ModelParams& params);

} // namespace mgdvd
