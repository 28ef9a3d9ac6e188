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
#include "mgdvd/synthgen.hpp"

#include "mgdvd/default_data.hpp"
#include "mgdvd/error.hpp"
#include "mgdvd/rng.hpp"
#include "mgdvd/text.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <optional>
#include <set>

namespace mgdvd {

namespace {

std::uint64_t mix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

std::string base_name(std::uint64_t seed, EntityType type, std::uint64_t k) {
    const auto h = mix(seed ^ mix((static_cast<std::uint64_t>(rank(type)) << 32) | k));
    return fmt::format("{}_{:06x}", entity_type_token(type), h & 0xffffff);
}

constexpr std::uint64_t kRootSlot = 0xffffffffull;

double round_ms(double t) { return std::round(t * 1000.0) / 1000.0; }

struct Timed {
    double time;
    std::size_t seq;
    Event event;
};

} // namespace

void FamilyTemplate::validate(const NetworkSchema& schema, const Catalog& catalog) const {
    if (label.empty() || label.find_first_of(" \t") != std::string::npos) {
        throw Error(Errc::invalid_argument, "family label must be a non-empty word");
    }
    for (const auto& [rel, rate] : rates) {
        if (!schema.find_relation(rel)) {
            throw Error(Errc::unknown_relation_type, "family " + label + ": relation '" + rel + "'");
        }
        if (!(rate >= 0.0) || !std::isfinite(rate)) {
            throw Error(Errc::invalid_argument, "family " + label + ": rate of " + rel + " must be >= 0");
        }
    }
    for (const auto& m : motifs) {
        if (m.metagraph_id < 1 || static_cast<std::size_t>(m.metagraph_id) > catalog.size()) {
            throw Error(Errc::parse_error, "family " + label + ": no meta-graph " + std::to_string(m.metagraph_id));
        }
        if (m.plants < 0) {
            throw Error(Errc::invalid_argument, "family " + label + ": negative plant count");
        }
    }
    for (auto p : pools) {
        if (p < 1) {
            throw Error(Errc::invalid_argument, "family " + label + ": entity pools must hold at least one entity");
        }
    }
    if (variety < 0) {
        throw Error(Errc::invalid_argument, "family " + label + ": variety must be >= 0");
    }
    if (!(rename >= 0.0 && rename <= 1.0) || !(dropout >= 0.0 && dropout <= 0.2) || !(jitter >= 0.0)) {
        throw Error(Errc::invalid_argument, "family " + label + ": rename in [0,1], dropout in [0,0.2], jitter >= 0");
    }
}

std::vector<FamilyTemplate> parse_families(std::string_view text_in, const NetworkSchema& schema,
                                           const Catalog& catalog) {
    std::vector<FamilyTemplate> out;
    std::optional<FamilyTemplate> cur;
    std::size_t line_no = 0;
    for (auto raw : text::split(text_in, '\n')) {
        ++line_no;
        auto tok = text::tokenize(text::trim(raw.substr(0, raw.find('#'))));
        if (tok.empty()) {
            continue;
        }
        const auto where = " (line " + std::to_string(line_no) + ")";
        auto number = [&](std::string_view s) {
            auto v = text::parse_double(s);
            if (!v) {
                throw Error(Errc::parse_error, "bad number '" + std::string(s) + "'" + where);
            }
            return *v;
        };
        auto integer = [&](std::string_view s) {
            auto v = text::parse_int(s);
            if (!v) {
                throw Error(Errc::parse_error, "bad integer '" + std::string(s) + "'" + where);
            }
            return *v;
        };
        const auto kw = tok[0];
        if (kw == "family") {
            if (cur || tok.size() != 2) {
                throw Error(Errc::parse_error, "unexpected 'family'" + where);
            }
            cur.emplace();
            cur->label = std::string(tok[1]);
            continue;
        }
        if (!cur) {
            throw Error(Errc::parse_error, "'" + std::string(kw) + "' outside a family block" + where);
        }
        if (kw == "end" && tok.size() == 1) {
            cur->validate(schema, catalog);
            out.push_back(std::move(*cur));
            cur.reset();
        } else if (kw == "rate" && tok.size() == 3) {
            cur->rates[std::string(tok[1])] = number(tok[2]);
        } else if (kw == "motif" && tok.size() == 3) {
            cur->motifs.push_back({static_cast<int>(integer(tok[1])), static_cast<int>(integer(tok[2]))});
        } else if (kw == "pool" && tok.size() == 3) {
            auto t = parse_entity_type(tok[1]);
            if (!t) {
                throw Error(Errc::unknown_entity_type, std::string(tok[1]) + where);
            }
            cur->pools[rank(*t)] = static_cast<int>(integer(tok[2]));
        } else if (kw == "rename" && tok.size() == 2) {
            cur->rename = number(tok[1]);
        } else if (kw == "dropout" && tok.size() == 2) {
            cur->dropout = number(tok[1]);
        } else if (kw == "jitter" && tok.size() == 2) {
            cur->jitter = number(tok[1]);
        } else if (kw == "variety" && tok.size() == 2) {
            cur->variety = static_cast<int>(integer(tok[1]));
        } else if (kw == "seed" && tok.size() == 2) {
            cur->seed = static_cast<std::uint64_t>(integer(tok[1]));
        } else {
            throw Error(Errc::parse_error, "unexpected '" + std::string(kw) + "'" + where);
        }
    }
    if (cur) {
        throw Error(Errc::parse_error, "family " + cur->label + " is missing 'end'");
    }
    std::set<std::string> labels;
    for (const auto& f : out) {
        if (!labels.insert(f.label).second) {
            throw Error(Errc::parse_error, "duplicate family " + f.label);
        }
    }
    return out;
}

std::vector<FamilyTemplate> load_families(const std::string& path, const NetworkSchema& schema,
                                          const Catalog& catalog) {
    return parse_families(text::read_file(path), schema, catalog);
}

const std::vector<FamilyTemplate>& default_families() {
    static const auto families = parse_families(data::kFamiliesText);
    return families;
}

GeneratedStream generate_stream(const FamilyTemplate& tmpl, double duration, std::uint64_t seed,
                                const std::string& sample_id, const NetworkSchema& schema, const Catalog& catalog) {
    tmpl.validate(schema, catalog);
    if (!(duration >= 0.0) || !std::isfinite(duration)) {
        throw Error(Errc::invalid_argument, "duration must be finite and non-negative");
    }
    GeneratedStream out;
    out.truth.sample_id = sample_id;
    out.truth.label = tmpl.label;
    Rng rng(mix(seed));

    // Variant naming: each base entity keeps its name or gets a per-stream one.
    auto variant = [&](EntityType type, std::uint64_t k) {
        EntityRef e{type, base_name(tmpl.seed, type, k)};
        if (rng.bernoulli(tmpl.rename)) {
            e.id += fmt::format("_{:04x}", rng.next() & 0xffff);
        }
        return e;
    };
    const EntityRef root = variant(EntityType::process, kRootSlot);
    std::array<std::vector<EntityRef>, kEntityTypeCount> pools;
    for (auto t : kAllEntityTypes) {
        for (int k = 0; k < tmpl.pools[rank(t)]; ++k) {
            pools[rank(t)].push_back(variant(t, static_cast<std::uint64_t>(k)));
        }
    }
    out.truth.root = root;
    if (duration <= 0.0) {
        return out;
    }

    std::vector<Timed> timed;
    auto emit = [&](double t, const EntityRef& src, RelationId rel, const EntityRef& dst) {
        timed.push_back({round_ms(t), timed.size(), Event{0.0, src, rel, dst, sample_id}});
    };
    auto pick = [&](EntityType t) -> const EntityRef& {
        const auto& pool = pools[rank(t)];
        return pool[rng.below(pool.size())];
    };
    auto source_of = [&](const RelationSpec& r) -> const EntityRef& {
        return r.src == EntityType::process ? root : pick(r.src);
    };

    // Background activity.
    std::optional<RelationId> opener;
    double top_rate = 0.0;
    for (const auto& [name, rate] : tmpl.rates) {
        const auto rel = *schema.find_relation(name);
        if (rate > top_rate) {
            top_rate = rate;
            opener = rel;
        }
    }
    if (opener) {
        const auto& spec = schema.relation(*opener);
        emit(0.0, source_of(spec), *opener, pools[rank(spec.dst)].front());
    }
    for (const auto& [name, rate] : tmpl.rates) {
        if (rate <= 0.0) {
            continue;
        }
        const auto rel = *schema.find_relation(name);
        const auto& spec = schema.relation(rel);
        for (double t = rng.exponential(rate); t < duration; t += rng.exponential(rate)) {
            const auto& src = source_of(spec);
            emit(t, src, rel, pick(spec.dst));
        }
    }

    // Motif plants: each pattern node bound to the root (source) or a pool
    // entity chosen by binding index, edges spaced 50 ms apart.
    for (const auto& plan : tmpl.motifs) {
        const auto& m = catalog.by_id(plan.metagraph_id);
        const double span = 0.05 * static_cast<double>(m.edges().size());
        for (int k = 0; k < plan.plants; ++k) {
            double t = (k + 0.5) * duration / plan.plants;
            if (tmpl.jitter > 0.0) {
                t += tmpl.jitter * rng.normal();
            }
            t = std::clamp(t, 0.0, std::max(0.0, duration - span - 1e-3));
            if (rng.bernoulli(tmpl.dropout)) {
                continue;
            }
            PlantedMotif plant{plan.metagraph_id, round_ms(t), {}};
            const auto binding = static_cast<std::size_t>(tmpl.variety > 0 ? k % tmpl.variety : k);
            for (std::size_t j = 0; j < m.size(); ++j) {
                if (j == m.source()) {
                    plant.nodes.push_back(root);
                    continue;
                }
                const auto& pool = pools[rank(m.types()[j])];
                plant.nodes.push_back(pool[(binding + j) % pool.size()]);
            }
            for (std::size_t e = 0; e < m.edges().size(); ++e) {
                const auto& pe = m.edges()[e];
                emit(t + 0.05 * static_cast<double>(e), plant.nodes[pe.graph_src()], pe.rel,
                     plant.nodes[pe.graph_dst()]);
            }
            out.truth.plants.push_back(std::move(plant));
        }
    }

    std::stable_sort(timed.begin(), timed.end(), [](const Timed& a, const Timed& b) {
        return a.time < b.time || (a.time == b.time && a.seq < b.seq);
    });
    out.events.reserve(timed.size());
    for (auto& t : timed) {
        t.event.timestamp = t.time;
        out.events.push_back(std::move(t.event));
    }
    std::sort(out.truth.plants.begin(), out.truth.plants.end(), [](const auto& a, const auto& b) {
        return a.time < b.time || (a.time == b.time && a.metagraph_id < b.metagraph_id);
    });
    return out;
}

std::string serialize_truth(const GroundTruth& truth) {
    std::string out = "sample " + truth.sample_id + "\nlabel " + truth.label + "\nroot " + format_entity(truth.root) +
                      "\n";
    for (const auto& p : truth.plants) {
        out += "plant " + std::to_string(p.metagraph_id) + " " + text::format_double(p.time);
        for (const auto& n : p.nodes) {
            out += " " + format_entity(n);
        }
        out += '\n';
    }
    return out;
}

std::string_view to_string(Split s) {
    switch (s) {
    case Split::train:
        return "train";
    case Split::validation:
        return "val";
    case Split::test:
        return "test";
    }
    return "?";
}

Split parse_split(std::string_view s) {
    for (auto v : {Split::train, Split::validation, Split::test}) {
        if (to_string(v) == s) {
            return v;
        }
    }
    throw Error(Errc::parse_error, "unknown split '" + std::string(s) + "'");
}

std::vector<CorpusSample> generate_corpus(std::span<const FamilyTemplate> templates, int per_family, double duration,
                                          std::uint64_t seed, const NetworkSchema& schema, const Catalog& catalog) {
    if (templates.size() < 2) {
        throw Error(Errc::insufficient_families, "a corpus needs at least two family templates");
    }
    if (per_family < 0) {
        throw Error(Errc::invalid_argument, "per-family count must be non-negative");
    }
    Rng rng(seed);
    std::vector<CorpusSample> out;
    for (const auto& tmpl : templates) {
        const auto n = static_cast<std::size_t>(per_family);
        std::vector<std::size_t> order(n);
        for (std::size_t i = 0; i < n; ++i) {
            order[i] = i;
        }
        rng.shuffle(order.begin(), order.end());
        const auto n_train = static_cast<std::size_t>(std::lround(0.6 * static_cast<double>(n)));
        const auto n_val = static_cast<std::size_t>(std::lround(0.2 * static_cast<double>(n)));
        std::vector<Split> split(n, Split::test);
        for (std::size_t r = 0; r < n; ++r) {
            split[order[r]] = r < n_train ? Split::train : (r < n_train + n_val ? Split::validation : Split::test);
        }
        for (std::size_t i = 0; i < n; ++i) {
            CorpusSample s;
            s.sample_id = fmt::format("{}-{:03d}", tmpl.label, i);
            s.label = tmpl.label;
            s.split = split[i];
            s.stream = generate_stream(tmpl, duration, rng.next(), s.sample_id, schema, catalog);
            out.push_back(std::move(s));
        }
    }
    return out;
}

void write_corpus(const std::string& dir, std::span<const CorpusSample> corpus, const NetworkSchema& schema) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(fs::path(dir) / "streams", ec);
    fs::create_directories(fs::path(dir) / "truth", ec);
    if (ec) {
        throw Error(Errc::io_error, "cannot create " + dir + ": " + ec.message());
    }
    std::vector<ManifestEntry> manifest;
    for (const auto& s : corpus) {
        const auto rel = "streams/" + s.sample_id + ".events";
        text::write_file((fs::path(dir) / rel).string(), serialize_events(s.stream.events, schema));
        text::write_file((fs::path(dir) / "truth" / (s.sample_id + ".truth")).string(),
                         serialize_truth(s.stream.truth));
        manifest.push_back({s.sample_id, s.label, s.split, rel});
    }
    text::write_file((fs::path(dir) / "manifest.tsv").string(), serialize_manifest(manifest));
}

std::string serialize_manifest(std::span<const ManifestEntry> entries) {
    std::string out = "sample_id\tlabel\tsplit\tpath\n";
    for (const auto& e : entries) {
        out += e.sample_id + "\t" + e.label + "\t" + std::string(to_string(e.split)) + "\t" + e.path + "\n";
    }
    return out;
}

std::vector<ManifestEntry> parse_manifest(std::string_view text_in) {
    std::vector<ManifestEntry> out;
    bool header = true;
    for (auto raw : text::split(text_in, '\n')) {
        auto line = text::trim(raw);
        if (line.empty()) {
            continue;
        }
        if (header) {
            header = false;
            if (line != "sample_id\tlabel\tsplit\tpath") {
                throw Error(Errc::parse_error, "manifest: unexpected header");
            }
            continue;
        }
        auto f = text::split(line, '\t');
        if (f.size() != 4) {
            throw Error(Errc::parse_error, "manifest: expected 4 columns in '" + std::string(line) + "'");
        }
        out.push_back({std::string(f[0]), std::string(f[1]), parse_split(f[2]), std::string(f[3])});
    }
    return out;
}

std::vector<ManifestEntry> load_manifest(const std::string& dir) {
    return parse_manifest(text::read_file((std::filesystem::path(dir) / "manifest.tsv").string()));
}

} // namespace mgdvd
