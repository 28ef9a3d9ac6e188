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

#include "mgdvd/schema.hpp"

#include <compare>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

namespace mgdvd {

/// A node identity. Ordering is by entity-type rank first, then id.
struct EntityRef {
    EntityType type{EntityType::process};
    std::string id;

    auto operator<=>(const EntityRef&) const = default;
    bool operator==(const EntityRef&) const = default;
};

struct Event {
    double timestamp{0.0};
    EntityRef src;
    RelationId rel{0};
    EntityRef dst;
    std::string sample_id;

    bool operator==(const Event&) const = default;
};

/// `<token>:<id>`, e.g. "proc:P1".
std::string format_entity(const EntityRef& e);

/// Parses one `timestamp|<etype>:<id>|<relation>|<etype>:<id>|<sample_id>`
/// record. A trailing '\r' is ignored.
Event parse_event_line(std::string_view line, const NetworkSchema& schema = default_schema());

/// Canonical form of an event record: short entity tokens and the shortest
/// round-tripping timestamp.
std::string format_event_line(const Event& e, const NetworkSchema& schema = default_schema());

/// Reads an event file (blank lines and '#' comment lines skipped). Rejects
/// events whose timestamp decreases within the same sample.
std::vector<Event> read_events(std::istream& in, const NetworkSchema& schema = default_schema());
std::vector<Event> load_events(const std::string& path, const NetworkSchema& schema = default_schema());
std::string serialize_events(const std::vector<Event>& events, const NetworkSchema& schema = default_schema());

} // namespace mgdvd
