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
#include "mgdvd/dhgs.hpp"

#include "mgdvd/error.hpp"
#include "mgdvd/text.hpp"

#include <algorithm>
#include <cmath>

namespace mgdvd {

void WindowConfig::validate() const {
    if (!(step > 0.0) || !(step <= window) || !std::isfinite(window)) {
        throw Error(Errc::invalid_argument, "window config needs 0 < step <= window, got window=" +
                                                text::format_double(window) + " step=" + text::format_double(step));
    }
}

bool HeteroGraph::add_edge(const EdgeKey& e) {
    const bool fresh = ++edges_[e] == 1;
    ++nodes_[e.src];
    ++nodes_[e.dst];
    ++occurrences_;
    return fresh;
}

bool HeteroGraph::remove_edge(const EdgeKey& e) {
    auto it = edges_.find(e);
    if (it == edges_.end()) {
        throw Error(Errc::invariant_violation, "removing an edge that is not in the graph");
    }
    const bool gone = --it->second == 0;
    if (gone) {
        edges_.erase(it);
    }
    drop_incidence(e.src);
    drop_incidence(e.dst);
    --occurrences_;
    return gone;
}

void HeteroGraph::drop_incidence(const EntityRef& n) {
    auto it = nodes_.find(n);
    if (--it->second == 0) {
        nodes_.erase(it);
    }
}

void HeteroGraph::set_window(std::size_t index, double start, double end) {
    index_ = index;
    start_ = start;
    end_ = end;
}

NodeSet HeteroGraph::node_set() const {
    NodeSet out;
    for (const auto& [n, _] : nodes_) {
        out.insert(out.end(), n);
    }
    return out;
}

std::string HeteroGraph::dump(const NetworkSchema& schema) const {
    std::string out = "window " + std::to_string(index_) + " [" + text::format_double(start_) + "," +
                      text::format_double(end_) + ") nodes=" + std::to_string(node_count()) +
                      " edges=" + std::to_string(edge_count()) + "\n";
    for (const auto& [e, count] : edges_) {
        out += format_entity(e.src);
        out += '|';
        out += schema.relation(e.rel).name;
        out += '|';
        out += format_entity(e.dst);
        out += '|';
        out += std::to_string(count);
        out += '\n';
    }
    return out;
}

NodeSet compute_dynamic_nodes(const HeteroGraph& prev, const HeteroGraph& cur, DeltaEndpoints endpoints) {
    NodeSet delta;
    auto mark = [&](const EdgeKey& e) {
        delta.insert(e.src);
        if (endpoints == DeltaEndpoints::both) {
            delta.insert(e.dst);
        }
    };
    // Merge walk over the two sorted edge maps.
    auto a = prev.edges().begin();
    auto b = cur.edges().begin();
    while (a != prev.edges().end() || b != cur.edges().end()) {
        if (b == cur.edges().end() || (a != prev.edges().end() && a->first < b->first)) {
            mark(a->first);
            ++a;
        } else if (a == prev.edges().end() || b->first < a->first) {
            mark(b->first);
            ++b;
        } else {
            ++a;
            ++b;
        }
    }
    return delta;
}

double churn_ratio(const NodeSet& delta, const HeteroGraph& g) {
    if (g.empty()) {
        throw Error(Errc::empty_graph, "churn ratio of an empty graph");
    }
    std::size_t hit = 0;
    for (const auto& n : delta) {
        if (g.has_node(n)) {
            ++hit;
        }
    }
    return static_cast<double>(hit) / static_cast<double>(g.node_count());
}

HeteroGraph build_window_graph(std::span<const Event> events, const WindowConfig& cfg, std::size_t index) {
    HeteroGraph g(index, cfg.start(index), cfg.end(index));
    auto first = std::lower_bound(events.begin(), events.end(), g.start(),
                                  [](const Event& e, double t) { return e.timestamp < t; });
    for (auto it = first; it != events.end() && it->timestamp < g.end(); ++it) {
        g.add_edge(edge_of(*it));
    }
    return g;
}

std::size_t window_count(std::span<const Event> events, const WindowConfig& cfg) {
    if (events.empty()) {
        return 0;
    }
    const double last = events.back().timestamp;
    std::size_t t = 1;
    while (cfg.end(t - 1) <= last) {
        ++t;
    }
    return t;
}

DhgsEngine::DhgsEngine(WindowConfig cfg, DeltaEndpoints endpoints) : cfg_(cfg), endpoints_(endpoints) {
    cfg_.validate();
}

void DhgsEngine::push(Event e) {
    if (finished_) {
        throw Error(Errc::invalid_argument, "push after finish");
    }
    if (has_events_ && e.timestamp < last_ts_) {
        throw Error(Errc::out_of_order_stream, "timestamp " + text::format_double(e.timestamp) + " after " +
                                                   text::format_double(last_ts_));
    }
    has_events_ = true;
    last_ts_ = e.timestamp;
    pending_.push_back(std::move(e));
}

bool DhgsEngine::done() const {
    if (!finished_) {
        return false;
    }
    if (!has_events_) {
        return true;
    }
    return next_index_ > 0 && cfg_.end(next_index_ - 1) > last_ts_;
}

std::optional<WindowStep> DhgsEngine::advance() {
    if (!has_events_ || done()) {
        return std::nullopt;
    }
    const std::size_t t = next_index_;
    const double start = cfg_.start(t);
    const double end = cfg_.end(t);
    if (!finished_ && last_ts_ < end) {
        return std::nullopt;
    }

    // Edges that disappeared or appeared; one doing both kept its presence.
    std::vector<EdgeKey> vanished;
    std::vector<EdgeKey> appeared;
    while (!active_.empty() && active_.front().timestamp < start) {
        auto key = edge_of(active_.front());
        if (graph_.remove_edge(key)) {
            vanished.push_back(std::move(key));
        }
        active_.pop_front();
    }
    while (!pending_.empty() && pending_.front().timestamp < end) {
        auto key = edge_of(pending_.front());
        if (graph_.add_edge(key)) {
            appeared.push_back(std::move(key));
        }
        active_.push_back(std::move(pending_.front()));
        pending_.pop_front();
    }
    graph_.set_window(t, start, end);
    std::sort(vanished.begin(), vanished.end());
    std::sort(appeared.begin(), appeared.end());
    std::vector<EdgeKey> flipped;
    std::set_symmetric_difference(vanished.begin(), vanished.end(), appeared.begin(), appeared.end(),
                                  std::back_inserter(flipped));

    WindowStep step;
    step.index = t;
    step.graph = &graph_;
    for (const auto& key : flipped) {
        step.delta.insert(key.src);
        if (endpoints_ == DeltaEndpoints::both) {
            step.delta.insert(key.dst);
        }
    }
    ++next_index_;
    return step;
}

} // namespace mgdvd
