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

#include "mgdvd/event.hpp"

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>

namespace mgdvd {

/// Sliding-window geometry: window t covers [t*step, t*step + window).
struct WindowConfig {
    double window{60.0};
    double step{30.0};

    /// Throws Error(invalid_argument) unless 0 < step <= window.
    void validate() const;

    double start(std::size_t t) const { return static_cast<double>(t) * step; }
    double end(std::size_t t) const { return start(t) + window; }
};

struct EdgeKey {
    EntityRef src;
    RelationId rel{0};
    EntityRef dst;

    auto operator<=>(const EdgeKey&) const = default;
    bool operator==(const EdgeKey&) const = default;
};

inline EdgeKey edge_of(const Event& e) { return {e.src, e.rel, e.dst}; }

using NodeSet = std::set<EntityRef>;

/// Typed multigraph of one window. Edges carry occurrence counts; a node
/// exists exactly while it has at least one incident edge occurrence.
class HeteroGraph {
public:
    HeteroGraph() = default;
    HeteroGraph(std::size_t index, double start, double end) : index_(index), start_(start), end_(end) {}

    /// True when the edge was not present before.
    bool add_edge(const EdgeKey& e);
    /// True when the last occurrence went away. Throws
    /// Error(invariant_violation) when the edge is absent.
    bool remove_edge(const EdgeKey& e);

    const std::map<EdgeKey, std::uint32_t>& edges() const { return edges_; }
    /// Node -> number of incident edge occurrences.
    const std::map<EntityRef, std::uint32_t>& nodes() const { return nodes_; }

    bool has_node(const EntityRef& n) const { return nodes_.contains(n); }
    bool has_edge(const EdgeKey& e) const { return edges_.contains(e); }
    std::size_t node_count() const { return nodes_.size(); }
    std::size_t edge_count() const { return edges_.size(); }
    std::size_t occurrence_count() const { return occurrences_; }
    bool empty() const { return nodes_.empty(); }

    std::size_t index() const { return index_; }
    double start() const { return start_; }
    double end() const { return end_; }
    void set_window(std::size_t index, double start, double end);

    NodeSet node_set() const;

    /// Node-for-node and edge-for-edge (with counts) equality; window bounds ignored.
    bool same_content(const HeteroGraph& other) const { return edges_ == other.edges_ && nodes_ == other.nodes_; }

    /// Deterministic sorted edge-list snapshot.
    std::string dump(const NetworkSchema& schema = default_schema()) const;

private:
    void drop_incidence(const EntityRef& n);

    std::size_t index_{0};
    double start_{0.0};
    double end_{0.0};
    std::map<EdgeKey, std::uint32_t> edges_;
    std::map<EntityRef, std::uint32_t> nodes_;
    std::size_t occurrences_{0};
};

/// Which endpoints of a changed edge are marked dynamic. `both` is the default;
/// `source_only` follows the literal single-endpoint reading.
enum class DeltaEndpoints { both, source_only };

/// Nodes incident to an edge present in exactly one of the two windows
/// (distinct-edge comparison; occurrence counts do not matter).
NodeSet compute_dynamic_nodes(const HeteroGraph& prev, const HeteroGraph& cur,
                              DeltaEndpoints endpoints = DeltaEndpoints::both);

/// |delta ∩ V_t| / |V_t|. Throws Error(empty_graph) for an empty graph.
double churn_ratio(const NodeSet& delta, const HeteroGraph& g);

/// From-scratch construction of window `index` over a time-ordered stream.
HeteroGraph build_window_graph(std::span<const Event> events, const WindowConfig& cfg, std::size_t index);

/// Number of windows a finished stream produces: window t is emitted when t == 0
/// or the previous window ended at or before the last timestamp.
std::size_t window_count(std::span<const Event> events, const WindowConfig& cfg);

struct WindowStep {
    std::size_t index{0};
    const HeteroGraph* graph{nullptr};
    NodeSet delta;
};

/// Incrementally maintains the window graph for one sample stream: events
/// entering the new window are inserted, events leaving it are removed, and
/// the dynamic nodes come from the edges whose presence flipped.
class DhgsEngine {
public:
    explicit DhgsEngine(WindowConfig cfg, DeltaEndpoints endpoints = DeltaEndpoints::both);

    /// Throws Error(out_of_order_stream) if the timestamp decreases.
    void push(Event e);
    void finish() { finished_ = true; }

    /// Next window once all of its events are known, otherwise nullopt.
    std::optional<WindowStep> advance();

    const HeteroGraph& graph() const { return graph_; }
    const WindowConfig& config() const { return cfg_; }
    std::size_t windows_emitted() const { return next_index_; }
    bool done() const;

private:
    WindowConfig cfg_;
    DeltaEndpoints endpoints_;
    HeteroGraph graph_;
    std::deque<Event> active_;
    std::deque<Event> pending_;
    std::size_t next_index_{0};
    bool has_events_{false};
    double last_ts_{0.0};
    bool finished_{false};
};

} // namespace mgdvd
