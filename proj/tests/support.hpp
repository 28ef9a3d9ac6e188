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

// Test-side helpers: random inputs and independent reference evaluations.
// Nothing in here calls the library routine it is used to check.

#include "mgdvd/detector.hpp"
#include "mgdvd/dhgs.hpp"
#include "mgdvd/encoders.hpp"
#include "mgdvd/metagraph.hpp"
#include "mgdvd/params.hpp"
#include "mgdvd/pipeline.hpp"
#include "mgdvd/rng.hpp"
#include "mgdvd/synthgen.hpp"
#include "mgdvd/trainer.hpp"

#include <map>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

namespace mgdvd::support {

EntityRef proc(std::string id);
EntityRef file(std::string id);
EntityRef ent(EntityType t, std::string id);

Event make_event(double t, const EntityRef& src, std::string_view rel, const EntityRef& dst,
                 std::string sample = "s");
EdgeKey make_edge(const EntityRef& src, std::string_view rel, const EntityRef& dst);

/// Random schema-legal events over at most `max_nodes` entities, timestamps
/// sorted in [0, duration).
std::vector<Event> random_stream(Rng& rng, std::size_t events, std::size_t max_nodes, double duration);

/// Random schema-legal graph with roughly `nodes` entities, dense enough that
/// most catalog patterns match somewhere.
HeteroGraph random_graph(Rng& rng, std::size_t nodes, std::size_t edges);

// ---- windowing references ----

using EdgeTriple = std::tuple<EntityRef, RelationId, EntityRef>;

/// Occurrence counts of every edge whose event falls into [start, end).
std::map<EdgeTriple, std::uint32_t> window_edges(const std::vector<Event>& events, double start, double end);

/// Literal dynamic-node rule: endpoints of edges present in exactly one of the
/// two edge sets.
std::set<EntityRef> dynamic_nodes_reference(const std::map<EdgeTriple, std::uint32_t>& prev,
                                            const std::map<EdgeTriple, std::uint32_t>& cur, bool source_only = false);

std::map<EdgeTriple, std::uint32_t> graph_edges(const HeteroGraph& g);

// ---- matching references ----

/// Every assignment of graph nodes to pattern nodes, filtered by types,
/// relations and the root rules. Sorted lexicographically.
std::vector<std::vector<EntityRef>> homomorphisms_reference(const HeteroGraph& g, const MetaGraph& m,
                                                            const EntityRef& root);

/// Pattern-node distance from the source by breadth-first search.
std::vector<std::uint32_t> pattern_depth_reference(const MetaGraph& m);

/// Non-root nodes of any instance with their minimum depth, sorted by type
/// rank, order, id; optionally intersected with `keep`.
std::vector<NeighborMember> neighbors_reference(const HeteroGraph& g, const MetaGraph& m, const EntityRef& root,
                                                const std::set<EntityRef>* keep = nullptr);

// ---- numeric references ----

std::vector<double> softmax_reference(const std::vector<double>& logits);
double pearson_reference(const std::vector<double>& x, const std::vector<double>& y);
std::vector<double> to_std(const Vector& v);

/// Neighbour weights from raw (type, order) pairs.
std::vector<double> neighbor_weights_reference(const std::vector<std::pair<EntityType, std::uint32_t>>& members);

/// One member of a neighbour set as the scalar aggregator sees it.
struct ScalarMember {
    EntityType type{EntityType::file};
    std::uint32_t order{1};
    std::vector<double> state;
    bool dynamic{false};
};

/// Layer-by-layer aggregator evaluated with plain loops over the flat
/// parameter buffer.
std::vector<double> aggregate_reference(const std::vector<double>& target, const std::vector<ScalarMember>& members,
                                        const ModelParams& params);

/// Attention + fusion + projection with plain loops.
std::vector<double> fuse_reference(const std::vector<std::vector<double>>& reps, const ModelParams& params,
                                   std::vector<double>* theta = nullptr);

/// Projection of a fused vector with plain loops.
std::vector<double> project_reference(const std::vector<double>& fused, const ModelParams& params);

/// Prior projection with plain loops.
std::vector<double> prior_row_reference(const std::vector<double>& prior, const ModelParams& params);

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b);
double max_abs_diff(const Vector& a, const std::vector<double>& b);

// ---- corpus helpers ----

/// Four malware families and benign from the shipped templates.
std::vector<TrainingSample> analysed_corpus(const std::vector<CorpusSample>& corpus, Split split,
                                            const PipelineConfig& cfg);

/// Central-difference gradient of batch_loss, one scalar at a time.
std::vector<double> numeric_gradient(const ModelParams& params, std::span<const TrainingSample> samples,
                                     std::span<const TrainingPair> pairs, double eps,
                                     const std::vector<std::size_t>& indices);

/// Smallest kink margin over every window of every sample.
double smallest_kink_margin(const ModelParams& params, std::span<const TrainingSample> samples);

/// Fresh temporary directory under the system temp path.
std::string temp_dir(std::string_view tag);

} // namespace mgdvd::support
