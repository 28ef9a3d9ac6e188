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
#include "mgdvd/metagraph.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mgdvd {

struct MotifPlan {
    int metagraph_id{0};
    int plants{0}; // spread evenly over the stream
};

/// Behaviour profile of one family. The base sample is fixed by `seed`;
/// variants differ by renamed entities, dropped motif plants and jittered
/// timings drawn from the per-stream seed.
struct FamilyTemplate {
    std::string label;
    std::map<std::string, double> rates; // relation name -> background events per second
    std::vector<MotifPlan> motifs;
    std::array<int, kEntityTypeCount> pools{3, 3, 3, 3, 3, 3, 3, 3}; // entities per type; process = children
    double rename{0.0};  // per-entity rename probability
    double dropout{0.0}; // per-plant drop probability, at most 0.2
    double jitter{0.0};  // std-dev of plant time shifts, seconds
    int variety{0};      // distinct entity bindings cycled through per motif; 0 = one per plant
    std::uint64_t seed{1};

    /// Error(invalid_argument) for negative rates, unknown relations, bad
    /// knobs; Error(parse_error) for motif ids missing from the catalog.
    void validate(const NetworkSchema& schema, const Catalog& catalog) const;
};

/// `family <label>` ... `end` blocks with `rate <relation> <per-second>`,
/// `motif <id> <plants>`, `pool <entity-type> <count>`, `rename <p>`,
/// `dropout <p>`, `jitter <seconds>`, `variety <n>` and `seed <n>` lines.
std::vector<FamilyTemplate> parse_families(std::string_view text, const NetworkSchema& schema = default_schema(),
                                           const Catalog& catalog = default_catalog());
std::vector<FamilyTemplate> load_families(const std::string& path, const NetworkSchema& schema = default_schema(),
                                          const Catalog& catalog = default_catalog());
const std::vector<FamilyTemplate>& default_families();

struct PlantedMotif {
    int metagraph_id{0};
    double time{0.0};
    std::vector<EntityRef> nodes; // one per pattern node
};

struct GroundTruth {
    std::string sample_id;
    std::string label;
    EntityRef root;
    std::vector<PlantedMotif> plants;
};

struct GeneratedStream {
    std::vector<Event> events;
    GroundTruth truth;
};

/// Time-ordered events in [0, duration). The root process opens the stream at
/// t = 0 when the template has background activity.
GeneratedStream generate_stream(const FamilyTemplate& tmpl, double duration, std::uint64_t seed,
                                const std::string& sample_id, const NetworkSchema& schema = default_schema(),
                                const Catalog& catalog = default_catalog());

std::string serialize_truth(const GroundTruth& truth);

enum class Split { train, validation, test };
std::string_view to_string(Split s);
Split parse_split(std::string_view s);

struct CorpusSample {
    std::string sample_id;
    std::string label;
    Split split{Split::train};
    GeneratedStream stream;
};

/// `per_family` samples per template, split 6:2:2 within each family.
/// Error(insufficient_families) for fewer than two templates.
std::vector<CorpusSample> generate_corpus(std::span<const FamilyTemplate> templates, int per_family, double duration,
                                          std::uint64_t seed, const NetworkSchema& schema = default_schema(),
                                          const Catalog& catalog = default_catalog());

struct ManifestEntry {
    std::string sample_id;
    std::string label;
    Split split{Split::train};
    std::string path; // relative to the corpus directory
};

/// Writes streams/<id>.events, truth/<id>.truth and manifest.tsv.
void write_corpus(const std::string& dir, std::span<const CorpusSample> corpus,
                  const NetworkSchema& schema = default_schema());
std::string serialize_manifest(std::span<const ManifestEntry> entries);
std::vector<ManifestEntry> parse_manifest(std::string_view text);
std::vector<ManifestEntry> load_manifest(const std::string& dir);

} // namespace mgdvd
