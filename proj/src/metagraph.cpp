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
#include "mgdvd/metagraph.hpp"

#include "mgdvd/default_data.hpp"
#include "mgdvd/error.hpp"
#include "mgdvd/logging.hpp"
#include "mgdvd/text.hpp"

#include <algorithm>
#include <deque>
#include <limits>
#include <map>
#include <set>

namespace mgdvd {

namespace {

constexpr std::int64_t kUnbound = -1;

/// Backtracking homomorphism search for one pattern over one graph.
class PatternSearch {
public:
    PatternSearch(const AdjacencyView& g, const MetaGraph& m, std::uint32_t root) : g_(g), m_(m), root_(root) {}

    /// True when every pattern edge whose endpoints are both bound is present
    /// and every bound node respects type and root constraints.
    bool consistent(const std::vector<std::int64_t>& bind) const {
        for (std::size_t q = 0; q < bind.size(); ++q) {
            if (bind[q] != kUnbound && !node_ok(q, static_cast<std::uint32_t>(bind[q]))) {
                return false;
            }
        }
        for (const auto& e : m_.edges()) {
            auto s = bind[e.graph_src()];
            auto d = bind[e.graph_dst()];
            if (s != kUnbound && d != kUnbound &&
                !g_.has_edge(static_cast<std::uint32_t>(s), e.rel, static_cast<std::uint32_t>(d))) {
                return false;
            }
        }
        return true;
    }

    /// Extends a consistent partial binding; `visit` returns true to stop.
    template <class Visit>
    bool extend(std::vector<std::int64_t>& bind, std::size_t unbound, Visit&& visit) {
        if (unbound == 0) {
            return visit(bind);
        }
        // Next pattern node: first unbound node touching a bound one.
        const PatternEdge* anchor = nullptr;
        std::size_t q = 0;
        for (const auto& e : m_.edges()) {
            bool from_bound = bind[e.from] != kUnbound;
            bool to_bound = bind[e.to] != kUnbound;
            if (from_bound != to_bound) {
                anchor = &e;
                q = from_bound ? e.to : e.from;
                break;
            }
        }
        if (anchor == nullptr) {
            throw Error(Errc::invariant_violation, "meta-graph is not connected");
        }
        const bool q_is_src = anchor->graph_src() == q;
        const auto bound = static_cast<std::uint32_t>(bind[q_is_src ? anchor->graph_dst() : anchor->graph_src()]);
        auto arcs = q_is_src ? g_.in(bound, anchor->rel) : g_.out(bound, anchor->rel);
        for (const auto& arc : arcs) {
            if (!node_ok(q, arc.node)) {
                continue;
            }
            bind[q] = arc.node;
            if (edges_ok(bind, q) && extend(bind, unbound - 1, visit)) {
                bind[q] = kUnbound;
                return true;
            }
            bind[q] = kUnbound;
        }
        return false;
    }

private:
    bool node_ok(std::size_t q, std::uint32_t x) const {
        if (g_.type(x) != m_.types()[q]) {
            return false;
        }
        return (q == m_.source()) == (x == root_);
    }

    bool edges_ok(const std::vector<std::int64_t>& bind, std::size_t q) const {
        for (const auto& e : m_.edges()) {
            if (e.from != q && e.to != q) {
                continue;
            }
            auto s = bind[e.graph_src()];
            auto d = bind[e.graph_dst()];
            if (s != kUnbound && d != kUnbound &&
                !g_.has_edge(static_cast<std::uint32_t>(s), e.rel, static_cast<std::uint32_t>(d))) {
                return false;
            }
        }
        return true;
    }

    const AdjacencyView& g_;
    const MetaGraph& m_;
    std::uint32_t root_;
};

std::uint32_t require_root(const AdjacencyView& g, const EntityRef& root) {
    auto idx = g.index_of(root);
    if (!idx) {
        throw Error(Errc::root_not_in_graph, format_entity(root));
    }
    return *idx;
}

} // namespace

MetaGraph make_metagraph(int id, std::vector<std::string> names, std::vector<EntityType> types,
                         std::vector<PatternEdge> edges, std::size_t source, std::size_t target,
                         const NetworkSchema& schema) {
    const std::size_t n = types.size();
    const std::string tag = "meta-graph " + std::to_string(id);
    if (n < 2 || names.size() != n) {
        throw Error(Errc::parse_error, tag + ": needs at least two named nodes");
    }
    if (source >= n || target >= n) {
        throw Error(Errc::parse_error, tag + ": source/target out of range");
    }
    std::vector<std::size_t> indeg(n, 0), outdeg(n, 0);
    for (const auto& e : edges) {
        if (e.from >= n || e.to >= n) {
            throw Error(Errc::parse_error, tag + ": edge endpoint out of range");
        }
        if (e.rel >= schema.relation_count()) {
            throw Error(Errc::schema_violation, tag + ": unknown relation id");
        }
        const auto& spec = schema.relation(e.rel);
        if (spec.src != types[e.graph_src()] || spec.dst != types[e.graph_dst()]) {
            throw Error(Errc::schema_violation, tag + ": edge " + names[e.from] + "->" + names[e.to] + " cannot use " +
                                                    (e.inverse ? "~" : "") + spec.name);
        }
        ++outdeg[e.from];
        ++indeg[e.to];
    }

    // Kahn's algorithm doubles as the cycle check.
    std::vector<std::size_t> remaining = indeg;
    std::deque<std::size_t> ready;
    for (std::size_t i = 0; i < n; ++i) {
        if (remaining[i] == 0) {
            ready.push_back(i);
        }
    }
    std::size_t visited = 0;
    while (!ready.empty()) {
        auto v = ready.front();
        ready.pop_front();
        ++visited;
        for (const auto& e : edges) {
            if (e.from == v && --remaining[e.to] == 0) {
                ready.push_back(e.to);
            }
        }
    }
    if (visited != n) {
        throw Error(Errc::not_a_dag, tag + " contains a cycle");
    }
    if (std::count(indeg.begin(), indeg.end(), 0u) != 1) {
        throw Error(Errc::multiple_sources, tag);
    }
    if (std::count(outdeg.begin(), outdeg.end(), 0u) != 1) {
        throw Error(Errc::multiple_targets, tag);
    }
    if (indeg[source] != 0) {
        throw Error(Errc::parse_error, tag + ": declared source has incoming edges");
    }
    if (outdeg[target] != 0) {
        throw Error(Errc::parse_error, tag + ": declared target has outgoing edges");
    }
    if (types[source] != EntityType::process || types[target] != EntityType::process) {
        throw Error(Errc::non_process_endpoint, tag + ": source and target must be processes");
    }

    MetaGraph m;
    m.id_ = id;
    m.names_ = std::move(names);
    m.types_ = std::move(types);
    m.edges_ = std::move(edges);
    m.source_ = source;
    m.target_ = target;
    m.depth_.assign(n, std::numeric_limits<std::uint32_t>::max());
    m.depth_[source] = 0;
    std::deque<std::size_t> frontier{source};
    while (!frontier.empty()) {
        auto v = frontier.front();
        frontier.pop_front();
        for (const auto& e : m.edges_) {
            if (e.from == v && m.depth_[e.to] == std::numeric_limits<std::uint32_t>::max()) {
                m.depth_[e.to] = m.depth_[v] + 1;
                frontier.push_back(e.to);
            }
        }
    }
    return m;
}

Catalog::Catalog(std::vector<MetaGraph> metagraphs) : metagraphs_(std::move(metagraphs)) {
    std::sort(metagraphs_.begin(), metagraphs_.end(),
              [](const MetaGraph& a, const MetaGraph& b) { return a.id() < b.id(); });
    for (std::size_t i = 0; i < metagraphs_.size(); ++i) {
        if (metagraphs_[i].id() != static_cast<int>(i + 1)) {
            throw Error(Errc::parse_error, "meta-graph ids must be unique and dense from 1");
        }
    }
}

Catalog parse_catalog(std::string_view text, const NetworkSchema& schema) {
    struct Block {
        int id = 0;
        std::vector<std::string> names;
        std::vector<EntityType> types;
        std::vector<std::tuple<std::string, std::string, std::string>> edges;
        std::string source, target;
    };
    std::vector<MetaGraph> out;
    std::optional<Block> block;
    std::size_t line_no = 0;

    auto finish = [&](Block& b) {
        auto index = [&](const std::string& name) {
            auto it = std::find(b.names.begin(), b.names.end(), name);
            if (it == b.names.end()) {
                throw Error(Errc::parse_error,
                            "meta-graph " + std::to_string(b.id) + ": unknown node '" + name + "'");
            }
            return static_cast<std::size_t>(it - b.names.begin());
        };
        std::vector<PatternEdge> edges;
        for (const auto& [from, to, rel_token] : b.edges) {
            PatternEdge e;
            e.from = index(from);
            e.to = index(to);
            std::string_view rel = rel_token;
            if (!rel.empty() && rel.front() == '~') {
                e.inverse = true;
                rel.remove_prefix(1);
            }
            auto rid = schema.find_relation(rel);
            if (!rid) {
                throw Error(Errc::schema_violation,
                            "meta-graph " + std::to_string(b.id) + ": unknown relation '" + std::string(rel) + "'");
            }
            e.rel = *rid;
            edges.push_back(e);
        }
        if (b.source.empty() || b.target.empty()) {
            throw Error(Errc::parse_error, "meta-graph " + std::to_string(b.id) + ": missing source or target");
        }
        auto s = index(b.source);
        auto t = index(b.target);
        out.push_back(make_metagraph(b.id, std::move(b.names), std::move(b.types), std::move(edges), s, t, schema));
    };

    for (auto raw : text::split(text, '\n')) {
        ++line_no;
        auto tok = text::tokenize(text::trim(raw.substr(0, raw.find('#'))));
        if (tok.empty()) {
            continue;
        }
        const auto where = " (line " + std::to_string(line_no) + ")";
        const auto& kw = tok[0];
        if (kw == "metagraph") {
            if (block || tok.size() != 2) {
                throw Error(Errc::parse_error, "unexpected 'metagraph'" + where);
            }
            auto id = text::parse_int(tok[1]);
            if (!id || *id < 1) {
                throw Error(Errc::parse_error, "bad meta-graph id" + where);
            }
            block.emplace();
            block->id = static_cast<int>(*id);
            continue;
        }
        if (!block) {
            throw Error(Errc::parse_error, "directive outside a meta-graph block" + where);
        }
        if (kw == "node" && tok.size() == 3) {
            auto t = parse_entity_type(tok[2]);
            if (!t) {
                throw Error(Errc::unknown_entity_type, std::string(tok[2]) + where);
            }
            std::string name(tok[1]);
            if (std::find(block->names.begin(), block->names.end(), name) != block->names.end()) {
                throw Error(Errc::parse_error, "duplicate node '" + name + "'" + where);
            }
            block->names.push_back(std::move(name));
            block->types.push_back(*t);
        } else if (kw == "edge" && tok.size() == 4) {
            block->edges.emplace_back(std::string(tok[1]), std::string(tok[2]), std::string(tok[3]));
        } else if (kw == "source" && tok.size() == 2) {
            block->source = std::string(tok[1]);
        } else if (kw == "target" && tok.size() == 2) {
            block->target = std::string(tok[1]);
        } else if (kw == "end" && tok.size() == 1) {
            finish(*block);
            block.reset();
        } else {
            throw Error(Errc::parse_error, "bad directive '" + std::string(kw) + "'" + where);
        }
    }
    if (block) {
        throw Error(Errc::parse_error, "unterminated meta-graph block");
    }
    return Catalog(std::move(out));
}

Catalog load_catalog(const std::string& path, const NetworkSchema& schema) {
    return parse_catalog(text::read_file(path), schema);
}

std::string serialize_catalog(const Catalog& catalog, const NetworkSchema& schema) {
    std::string out;
    for (const auto& m : catalog.metagraphs()) {
        out += "metagraph " + std::to_string(m.id()) + "\n";
        for (std::size_t i = 0; i < m.size(); ++i) {
            out += "  node " + m.names()[i] + " " + std::string(entity_type_name(m.types()[i])) + "\n";
        }
        for (const auto& e : m.edges()) {
            out += "  edge " + m.names()[e.from] + " " + m.names()[e.to] + " " + (e.inverse ? "~" : "") +
                   schema.relation(e.rel).name + "\n";
        }
        out += "  source " + m.names()[m.source()] + "\n";
        out += "  target " + m.names()[m.target()] + "\nend\n";
    }
    return out;
}

const Catalog& default_catalog() {
    static const Catalog catalog = parse_catalog(data::kCatalogText, default_schema());
    return catalog;
}

AdjacencyView::AdjacencyView(const HeteroGraph& g) : by_type_(kEntityTypeCount) {
    nodes_.reserve(g.node_count());
    for (const auto& [n, _] : g.nodes()) {
        by_type_[rank(n.type)].push_back(static_cast<std::uint32_t>(nodes_.size()));
        nodes_.push_back(n);
    }
    const std::size_t n = nodes_.size();
    std::vector<std::tuple<std::uint32_t, RelationId, std::uint32_t>> triples;
    triples.reserve(g.edge_count());
    for (const auto& [e, _] : g.edges()) {
        triples.emplace_back(*index_of(e.src), e.rel, *index_of(e.dst));
    }
    out_offsets_.assign(n + 1, 0);
    in_offsets_.assign(n + 1, 0);
    for (const auto& [s, r, d] : triples) {
        ++out_offsets_[s + 1];
        ++in_offsets_[d + 1];
    }
    for (std::size_t i = 0; i < n; ++i) {
        out_offsets_[i + 1] += out_offsets_[i];
        in_offsets_[i + 1] += in_offsets_[i];
    }
    out_arcs_.resize(triples.size());
    in_arcs_.resize(triples.size());
    auto out_fill = out_offsets_;
    auto in_fill = in_offsets_;
    for (const auto& [s, r, d] : triples) {
        out_arcs_[out_fill[s]++] = {r, d};
        in_arcs_[in_fill[d]++] = {r, s};
    }
    for (std::size_t i = 0; i < n; ++i) {
        std::sort(out_arcs_.begin() + out_offsets_[i], out_arcs_.begin() + out_offsets_[i + 1]);
        std::sort(in_arcs_.begin() + in_offsets_[i], in_arcs_.begin() + in_offsets_[i + 1]);
    }
}

std::optional<std::uint32_t> AdjacencyView::index_of(const EntityRef& n) const {
    auto it = std::lower_bound(nodes_.begin(), nodes_.end(), n);
    if (it == nodes_.end() || *it != n) {
        return std::nullopt;
    }
    return static_cast<std::uint32_t>(it - nodes_.begin());
}

std::span<const AdjacencyView::Arc> AdjacencyView::out(std::uint32_t i) const {
    return {out_arcs_.data() + out_offsets_[i], out_arcs_.data() + out_offsets_[i + 1]};
}

std::span<const AdjacencyView::Arc> AdjacencyView::in(std::uint32_t i) const {
    return {in_arcs_.data() + in_offsets_[i], in_arcs_.data() + in_offsets_[i + 1]};
}

namespace {

std::span<const AdjacencyView::Arc> with_relation(std::span<const AdjacencyView::Arc> arcs, RelationId rel) {
    auto lo = std::lower_bound(arcs.begin(), arcs.end(), rel,
                               [](const AdjacencyView::Arc& a, RelationId r) { return a.rel < r; });
    auto hi = std::upper_bound(lo, arcs.end(), rel,
                               [](RelationId r, const AdjacencyView::Arc& a) { return r < a.rel; });
    return {lo, hi};
}

} // namespace

std::span<const AdjacencyView::Arc> AdjacencyView::out(std::uint32_t i, RelationId rel) const {
    return with_relation(out(i), rel);
}

std::span<const AdjacencyView::Arc> AdjacencyView::in(std::uint32_t i, RelationId rel) const {
    return with_relation(in(i), rel);
}

bool AdjacencyView::has_edge(std::uint32_t src, RelationId rel, std::uint32_t dst) const {
    auto arcs = out(src);
    return std::binary_search(arcs.begin(), arcs.end(), Arc{rel, dst});
}

std::span<const std::uint32_t> AdjacencyView::nodes_of_type(EntityType t) const { return by_type_[rank(t)]; }

MatchResult match_instances(const AdjacencyView& g, const MetaGraph& m, const EntityRef& root, std::size_t cap) {
    const auto root_idx = require_root(g, root);
    MatchResult result;
    if (g.type(root_idx) != m.types()[m.source()]) {
        return result;
    }
    PatternSearch search(g, m, root_idx);
    std::vector<std::int64_t> bind(m.size(), kUnbound);
    bind[m.source()] = root_idx;
    search.extend(bind, m.size() - 1, [&](const std::vector<std::int64_t>& b) {
        if (result.instances.size() == cap) {
            result.truncated = true;
            return true;
        }
        result.instances.emplace_back(b.begin(), b.end());
        return false;
    });
    if (result.truncated) {
        logger().warn("meta-graph {} rooted at {}: instance enumeration truncated at {}", m.id(), format_entity(root),
                      cap);
    }
    std::sort(result.instances.begin(), result.instances.end());
    return result;
}

NeighborSet neighbor_set(const AdjacencyView& g, const MetaGraph& m, const EntityRef& root,
                         const NodeSet* restrict_to) {
    const auto root_idx = require_root(g, root);
    NeighborSet out;
    out.target = root;
    out.metagraph_id = m.id();
    if (g.type(root_idx) != m.types()[m.source()]) {
        return out;
    }

    // Pattern positions a neighbour can occupy, shallowest first.
    std::vector<std::size_t> slots;
    for (std::size_t q = 0; q < m.size(); ++q) {
        if (q != m.source()) {
            slots.push_back(q);
        }
    }
    std::stable_sort(slots.begin(), slots.end(),
                     [&](std::size_t a, std::size_t b) { return m.depth()[a] < m.depth()[b]; });

    std::vector<std::uint32_t> candidates;
    if (restrict_to != nullptr) {
        for (const auto& n : *restrict_to) {
            if (auto idx = g.index_of(n); idx && *idx != root_idx) {
                candidates.push_back(*idx);
            }
        }
    } else {
        for (std::uint32_t i = 0; i < g.size(); ++i) {
            if (i != root_idx) {
                candidates.push_back(i);
            }
        }
    }

    PatternSearch search(g, m, root_idx);
    std::vector<std::int64_t> bind(m.size(), kUnbound);
    for (auto u : candidates) {
        for (auto q : slots) {
            if (m.types()[q] != g.type(u)) {
                continue;
            }
            std::fill(bind.begin(), bind.end(), kUnbound);
            bind[m.source()] = root_idx;
            bind[q] = u;
            if (search.consistent(bind) &&
                search.extend(bind, m.size() - 2, [](const std::vector<std::int64_t>&) { return true; })) {
                out.members.push_back({g.node(u), m.depth()[q]});
                break;
            }
        }
    }
    std::sort(out.members.begin(), out.members.end(), [](const NeighborMember& a, const NeighborMember& b) {
        if (a.node.type != b.node.type) {
            return rank(a.node.type) < rank(b.node.type);
        }
        if (a.order != b.order) {
            return a.order < b.order;
        }
        return a.node.id < b.node.id;
    });
    return out;
}

} // namespace mgdvd
