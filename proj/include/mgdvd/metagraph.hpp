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
#include "mgdvd/schema.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mgdvd {

/// Pattern edge from -> to. When `inverse` is set the edge is realised by a
/// graph edge to -rel-> from.
struct PatternEdge {
    std::size_t from{0};
    std::size_t to{0};
    RelationId rel{0};
    bool inverse{false};

    std::size_t graph_src() const { return inverse ? to : from; }
    std::size_t graph_dst() const { return inverse ? from : to; }
};

/// Single-source / single-target typed DAG pattern. Instances are built only
/// through make_metagraph(), which enforces the structural invariants.
class MetaGraph {
public:
    int id() const { return id_; }
    std::size_t size() const { return types_.size(); }
    const std::vector<std::string>& names() const { return names_; }
    const std::vector<EntityType>& types() const { return types_; }
    const std::vector<PatternEdge>& edges() const { return edges_; }
    std::size_t source() const { return source_; }
    std::size_t target() const { return target_; }
    /// Shortest directed distance of each pattern node from the source.
    const std::vector<std::uint32_t>& depth() const { return depth_; }

private:
    friend MetaGraph make_metagraph(int, std::vector<std::string>, std::vector<EntityType>, std::vector<PatternEdge>,
                                    std::size_t, std::size_t, const NetworkSchema&);

    int id_{0};
    std::vector<std::string> names_;
    std::vector<EntityType> types_;
    std::vector<PatternEdge> edges_;
    std::size_t source_{0};
    std::size_t target_{0};
    std::vector<std::uint32_t> depth_;
};

/// Validates and builds a meta-graph. Errors: schema_violation, not_a_dag,
/// multiple_sources, multiple_targets, non_process_endpoint, parse_error.
MetaGraph make_metagraph(int id, std::vector<std::string> names, std::vector<EntityType> types,
                         std::vector<PatternEdge> edges, std::size_t source, std::size_t target,
                         const NetworkSchema& schema = default_schema());

class Catalog {
public:
    Catalog() = default;
    /// Ids must be unique and dense 1..n (any order); stored sorted by id.
    explicit Catalog(std::vector<MetaGraph> metagraphs);

    const std::vector<MetaGraph>& metagraphs() const { return metagraphs_; }
    std::size_t size() const { return metagraphs_.size(); }
    const MetaGraph& by_id(int id) const { return metagraphs_.at(static_cast<std::size_t>(id - 1)); }

private:
    std::vector<MetaGraph> metagraphs_;
};

Catalog parse_catalog(std::string_view text, const NetworkSchema& schema = default_schema());
Catalog load_catalog(const std::string& path, const NetworkSchema& schema = default_schema());
std::string serialize_catalog(const Catalog& catalog, const NetworkSchema& schema = default_schema());
const Catalog& default_catalog();

/// Index-based adjacency of one window graph. Node indices follow the
/// sorted EntityRef order; arcs are sorted by (relation, neighbour).
class AdjacencyView {
public:
    struct Arc {
        RelationId rel;
        std::uint32_t node;

        auto operator<=>(const Arc&) const = default;
    };

    explicit AdjacencyView(const HeteroGraph& g);

    std::size_t size() const { return nodes_.size(); }
    const EntityRef& node(std::uint32_t i) const { return nodes_[i]; }
    EntityType type(std::uint32_t i) const { return nodes_[i].type; }
    std::optional<std::uint32_t> index_of(const EntityRef& n) const;

    std::span<const Arc> out(std::uint32_t i) const;
    std::span<const Arc> in(std::uint32_t i) const;
    /// Arcs of `i` labelled `rel`, outgoing or incoming.
    std::span<const Arc> out(std::uint32_t i, RelationId rel) const;
    std::span<const Arc> in(std::uint32_t i, RelationId rel) const;
    bool has_edge(std::uint32_t src, RelationId rel, std::uint32_t dst) const;
    std::span<const std::uint32_t> nodes_of_type(EntityType t) const;

private:
    std::vector<EntityRef> nodes_;
    std::vector<std::uint32_t> out_offsets_, in_offsets_;
    std::vector<Arc> out_arcs_, in_arcs_;
    std::vector<std::vector<std::uint32_t>> by_type_;
};

/// Pattern node -> graph node index.
using Instance = std::vector<std::uint32_t>;

inline constexpr std::size_t kInstanceCap = 10000;

struct MatchResult {
    std::vector<Instance> instances;
    bool truncated{false};
};

/// All homomorphisms of `m` into the graph with source -> root. Types, relations
/// and directions are preserved; no pattern node other than the source may map
/// to the root. Sorted lexicographically; capped at `cap` instances.
MatchResult match_instances(const AdjacencyView& g, const MetaGraph& m, const EntityRef& root,
                            std::size_t cap = kInstanceCap);

struct NeighborMember {
    EntityRef node;
    std::uint32_t order{1};

    bool operator==(const NeighborMember&) const = default;
};

/// Path-relevant neighbours of a target process under one meta-graph,
/// sorted by entity-type rank, then order, then id.
struct NeighborSet {
    EntityRef target;
    int metagraph_id{0};
    std::vector<NeighborMember> members;

    bool empty() const { return members.empty(); }
    std::size_t size() const { return members.size(); }
};

/// Non-root nodes appearing in any instance rooted at `root`, each with its
/// minimum pattern depth. With `restrict_to`, only nodes of that set are
/// walked (the dynamic walk) and the result is N ∩ restrict_to.
NeighborSet neighbor_set(const AdjacencyView& g, const MetaGraph& m, const EntityRef& root,
                         const NodeSet* restrict_to = nullptr);

} // namespace mgdvd
