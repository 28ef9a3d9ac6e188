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
#include "mgdvd/schema.hpp"

#include "mgdvd/default_data.hpp"
#include "mgdvd/error.hpp"
#include "mgdvd/text.hpp"

#include <algorithm>
#include <set>

namespace mgdvd {

namespace {

struct EntityNames {
    std::string_view name;
    std::string_view token;
};

constexpr std::array<EntityNames, kEntityTypeCount> kNames{{
    {"process", "proc"},
    {"file", "file"},
    {"memory", "mem"},
    {"registry", "reg"},
    {"system", "sys"},
    {"mutex", "mutex"},
    {"attribute", "attr"},
    {"network", "net"},
}};

} // namespace

std::string_view entity_type_name(EntityType t) { return kNames[rank(t)].name; }

std::string_view entity_type_token(EntityType t) { return kNames[rank(t)].token; }

std::optional<EntityType> parse_entity_type(std::string_view s) {
    for (std::size_t i = 0; i < kNames.size(); ++i) {
        if (kNames[i].name == s || kNames[i].token == s) {
            return kAllEntityTypes[i];
        }
    }
    return std::nullopt;
}

NetworkSchema::NetworkSchema(std::vector<EntityType> entity_types, std::vector<RelationSpec> relations)
    : entity_types_(std::move(entity_types)), relations_(std::move(relations)) {}

bool NetworkSchema::declares(EntityType t) const {
    return std::find(entity_types_.begin(), entity_types_.end(), t) != entity_types_.end();
}

std::optional<RelationId> NetworkSchema::find_relation(std::string_view name) const {
    for (std::size_t i = 0; i < relations_.size(); ++i) {
        if (relations_[i].name == name) {
            return static_cast<RelationId>(i);
        }
    }
    return std::nullopt;
}

void validate_schema(const NetworkSchema& schema) {
    std::set<EntityType> distinct_types(schema.entity_types().begin(), schema.entity_types().end());
    if (distinct_types.size() <= 1) {
        throw Error(Errc::degenerate_schema, "schema needs more than one entity type");
    }
    std::set<std::string> distinct_relations;
    for (const auto& r : schema.relations()) {
        distinct_relations.insert(r.name);
    }
    if (distinct_relations.size() != schema.relations().size()) {
        throw Error(Errc::degenerate_schema, "duplicate relation name");
    }
    if (distinct_relations.size() <= 1) {
        throw Error(Errc::degenerate_schema, "schema needs more than one relation type");
    }
    for (const auto& r : schema.relations()) {
        if (!schema.declares(r.src) || !schema.declares(r.dst)) {
            throw Error(Errc::dangling_endpoint, "relation '" + r.name + "' uses an undeclared entity type");
        }
    }
}

NetworkSchema parse_schema(std::string_view text) {
    std::vector<EntityType> entities;
    std::vector<std::pair<std::string, std::pair<std::string, std::string>>> raw_relations;
    std::size_t line_no = 0;
    for (auto raw : text::split(text, '\n')) {
        ++line_no;
        auto line = raw.substr(0, raw.find('#'));
        auto tok = text::tokenize(text::trim(line));
        if (tok.empty()) {
            continue;
        }
        const auto where = " (line " + std::to_string(line_no) + ")";
        if (tok[0] == "entity") {
            if (tok.size() != 2) {
                throw Error(Errc::parse_error, "expected 'entity <type>'" + where);
            }
            auto t = parse_entity_type(tok[1]);
            if (!t) {
                throw Error(Errc::unknown_entity_type, std::string(tok[1]) + where);
            }
            if (std::find(entities.begin(), entities.end(), *t) != entities.end()) {
                throw Error(Errc::parse_error, "duplicate entity type" + where);
            }
            entities.push_back(*t);
        } else if (tok[0] == "relation") {
            if (tok.size() != 4) {
                throw Error(Errc::parse_error, "expected 'relation <name> <src> <dst>'" + where);
            }
            raw_relations.push_back({std::string(tok[1]), {std::string(tok[2]), std::string(tok[3])}});
        } else {
            throw Error(Errc::parse_error, "unknown directive '" + std::string(tok[0]) + "'" + where);
        }
    }

    std::vector<RelationSpec> relations;
    for (const auto& [name, ends] : raw_relations) {
        auto src = parse_entity_type(ends.first);
        auto dst = parse_entity_type(ends.second);
        if (!src || !dst || std::find(entities.begin(), entities.end(), *src) == entities.end() ||
            std::find(entities.begin(), entities.end(), *dst) == entities.end()) {
            throw Error(Errc::dangling_endpoint,
                        "relation '" + name + "' references undeclared type '" +
                            (src && std::find(entities.begin(), entities.end(), *src) != entities.end()
                                 ? ends.second
                                 : ends.first) +
                            "'");
        }
        relations.push_back({name, *src, *dst});
    }
    NetworkSchema schema(std::move(entities), std::move(relations));
    validate_schema(schema);
    return schema;
}

NetworkSchema load_schema(const std::string& path) { return parse_schema(text::read_file(path)); }

std::string serialize_schema(const NetworkSchema& schema) {
    std::string out;
    for (auto t : schema.entity_types()) {
        out += "entity ";
        out += entity_type_name(t);
        out += '\n';
    }
    for (const auto& r : schema.relations()) {
        out += "relation " + r.name + " ";
        out += entity_type_name(r.src);
        out += ' ';
        out += entity_type_name(r.dst);
        out += '\n';
    }
    return out;
}

const NetworkSchema& default_schema() {
    static const NetworkSchema schema = parse_schema(data::kSchemaText);
    return schema;
}

} // namespace mgdvd
