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

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mgdvd {

/// The eight entity kinds of the execution-event schema. Declaration order is
/// the canonical sort rank used when assembling representation matrices.
enum class EntityType : std::uint8_t {
    process,
    file,
    memory,
    registry,
    system,
    mutex,
    attribute,
    network,
};

inline constexpr std::size_t kEntityTypeCount = 8;

inline constexpr std::array<EntityType, kEntityTypeCount> kAllEntityTypes{
    EntityType::process, EntityType::file,  EntityType::memory,    EntityType::registry,
    EntityType::system,  EntityType::mutex, EntityType::attribute, EntityType::network,
};

constexpr std::size_t rank(EntityType t) { return static_cast<std::size_t>(t); }

/// Long name, e.g. "process".
std::string_view entity_type_name(EntityType t);

/// Short token used in event files, e.g. "proc".
std::string_view entity_type_token(EntityType t);

/// Accepts either the long name or the short token.
std::optional<EntityType> parse_entity_type(std::string_view s);

using RelationId = std::uint16_t;

struct RelationSpec {
    std::string name;
    EntityType src;
    EntityType dst;

    bool operator==(const RelationSpec&) const = default;
};

/// Type-level graph of entity types and relation triples. Construction does
/// not validate; call validate_schema() (parse_schema() does so automatically).
class NetworkSchema {
public:
    NetworkSchema() = default;
    NetworkSchema(std::vector<EntityType> entity_types, std::vector<RelationSpec> relations);

    const std::vector<EntityType>& entity_types() const { return entity_types_; }
    const std::vector<RelationSpec>& relations() const { return relations_; }
    const RelationSpec& relation(RelationId id) const { return relations_.at(id); }
    std::size_t relation_count() const { return relations_.size(); }

    bool declares(EntityType t) const;
    std::optional<RelationId> find_relation(std::string_view name) const;

    bool operator==(const NetworkSchema&) const = default;

private:
    std::vector<EntityType> entity_types_;
    std::vector<RelationSpec> relations_;
};

/// Throws Error(degenerate_schema) unless |A| > 1 and |R| > 1, and
/// Error(dangling_endpoint) if a relation uses an undeclared entity type.
void validate_schema(const NetworkSchema& schema);

/// Parses the declarative schema text:
///   entity <type>
///   relation <name> <src_type> <dst_type>
/// '#' starts a comment. The result is validated.
NetworkSchema parse_schema(std::string_view text);
NetworkSchema load_schema(const std::string& path);
std::string serialize_schema(const NetworkSchema& schema);

/// The 8-entity / 10-relation schema shipped in data/schema.txt.
const NetworkSchema& default_schema();

} // namespace mgdvd
