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
#include "mgdvd/encoders.hpp"
#include "mgdvd/metagraph.hpp"

#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace mgdvd {

/// How neighbours are discovered and which encoder runs per window.
///   automatic   - incremental graph, dynamic walk, churn-based dispatch
///   dwiue/chgae - incremental graph, encoder forced
///   static_walk - graph rebuilt from scratch and every process node re-walked
///                 each window; embeddings equal to `automatic`
enum class WalkMode { automatic, dwiue, chgae, static_walk };

std::string_view to_string(WalkMode mode);
/// "auto", "dwiue", "chgae", "static-walk"; Error(invalid_argument) otherwise.
WalkMode parse_walk_mode(std::string_view name);

struct PipelineConfig {
    WindowConfig window;
    double gamma{0.3};
    WalkMode mode{WalkMode::automatic};
    DeltaEndpoints endpoints{DeltaEndpoints::both};
    int rep_dim{64};
};

/// Parameter-independent description of one window, ready for encode_window().
struct WindowAnalysis {
    std::size_t index{0};
    std::size_t node_count{0};
    std::size_t edge_count{0};
    std::size_t delta_count{0};
    double churn{0.0};
    WindowInput input;
};

/// The process a stream is about: source of the first process-sourced event.
std::optional<EntityRef> target_process(std::span<const Event> events);

/// Online front half of the pipeline for a single sample stream.
class StreamAnalyzer {
public:
    StreamAnalyzer(PipelineConfig cfg, const Catalog& catalog);

    void push(Event e);
    void finish();
    /// Next completed window, or nullopt until more events (or finish()) arrive.
    std::optional<WindowAnalysis> next();

    const std::optional<EntityRef>& target() const { return target_; }

private:
    WindowAnalysis analyze(std::size_t index, const HeteroGraph& g, const NodeSet& delta);
    std::optional<WindowAnalysis> next_static();

    PipelineConfig cfg_;
    const Catalog* catalog_;
    StateStore states_;
    std::optional<EntityRef> target_;
    DhgsEngine engine_;
    // static-walk state
    std::vector<Event> events_;
    HeteroGraph prev_;
    std::size_t next_static_{0};
    bool finished_{false};
};

std::vector<WindowAnalysis> analyze_stream(std::span<const Event> events, const PipelineConfig& cfg,
                                           const Catalog& catalog);

/// Embeddings of every window, each fed the previous one as prior.
std::vector<Vector> embed_windows(const ModelParams& params, std::span<const WindowAnalysis> windows);

/// Prior of the last window and the last embedding; both empty for no windows.
struct FinalWindow {
    Vector prior;
    Vector embedding;
};
FinalWindow embed_final(const ModelParams& params, std::span<const WindowAnalysis> windows);

} // namespace mgdvd
