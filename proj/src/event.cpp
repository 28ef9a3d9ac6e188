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
#include "mgdvd/event.hpp"

#include "mgdvd/error.hpp"
#include "mgdvd/text.hpp"

#include <cmath>
#include <fstream>
#include <map>

namespace mgdvd {

namespace {

EntityRef parse_entity(std::string_view field) {
    auto colon = field.find(':');
    if (colon == std::string_view::npos) {
        throw Error(Errc::malformed_record, "entity '" + std::string(field) + "' lacks '<type>:'");
    }
    auto type = parse_entity_type(field.substr(0, colon));
    if (!type) {
        throw Error(Errc::unknown_entity_type, std::string(field.substr(0, colon)));
    }
    auto id = field.substr(colon + 1);
    if (id.empty()) {
        throw Error(Errc::malformed_record, "empty entity id");
    }
    return {*type, std::string(id)};
}

} // namespace

std::string format_entity(const EntityRef& e) {
    std::string out(entity_type_token(e.type));
    out += ':';
    out += e.id;
    return out;
}

Event parse_event_line(std::string_view line, const NetworkSchema& schema) {
    if (!line.empty() && line.back() == '\r') {
        line.remove_suffix(1);
    }
    auto fields = text::split(line, '|');
    if (fields.size() != 5) {
        throw Error(Errc::malformed_record, "expected 5 fields, got " + std::to_string(fields.size()));
    }
    auto ts = text::parse_double(fields[0]);
    if (!ts || !std::isfinite(*ts)) {
        throw Error(Errc::malformed_record, "bad timestamp '" + std::string(fields[0]) + "'");
    }
    if (*ts < 0.0) {
        throw Error(Errc::malformed_record, "negative timestamp");
    }
    Event e;
    e.timestamp = *ts;
    e.src = parse_entity(fields[1]);
    auto rel = schema.find_relation(fields[2]);
    if (!rel) {
        throw Error(Errc::unknown_relation_type, std::string(fields[2]));
    }
    e.rel = *rel;
    e.dst = parse_entity(fields[3]);
    if (fields[4].empty()) {
        throw Error(Errc::malformed_record, "empty sample id");
    }
    e.sample_id = std::string(fields[4]);

    const auto& spec = schema.relation(e.rel);
    if (spec.src != e.src.type || spec.dst != e.dst.type) {
        throw Error(Errc::schema_violation,
                    spec.name + " expects " + std::string(entity_type_name(spec.src)) + " -> " +
                        std::string(entity_type_name(spec.dst)));
    }
    return e;
}

std::string format_event_line(const Event& e, const NetworkSchema& schema) {
    std::string out = text::format_double(e.timestamp);
    out += '|';
    out += format_entity(e.src);
    out += '|';
    out += schema.relation(e.rel).name;
    out += '|';
    out += format_entity(e.dst);
    out += '|';
    out += e.sample_id;
    return out;
}

std::vector<Event> read_events(std::istream& in, const NetworkSchema& schema) {
    std::vector<Event> events;
    std::map<std::string, double, std::less<>> last_ts;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto view = text::trim(line);
        if (view.empty() || view.front() == '#') {
            continue;
        }
        Event e;
        try {
            e = parse_event_line(line, schema);
        } catch (const Error& err) {
            throw Error(err.code(), "line " + std::to_string(line_no) + ": " + err.what());
        }
        auto [it, inserted] = last_ts.try_emplace(e.sample_id, e.timestamp);
        if (!inserted) {
            if (e.timestamp < it->second) {
                throw Error(Errc::out_of_order_stream, "line " + std::to_string(line_no) + ": timestamp " +
                                                           text::format_double(e.timestamp) + " after " +
                                                           text::format_double(it->second));
            }
            it->second = e.timestamp;
        }
        events.push_back(std::move(e));
    }
    return events;
}

std::vector<Event> load_events(const std::string& path, const NetworkSchema& schema) {
    std::ifstream in(path);
    if (!in) {
        throw Error(Errc::io_error, "cannot open " + path);
    }
    return read_events(in, schema);
}

std::string serialize_events(const std::vector<Event>& events, const NetworkSchema& schema) {
    std::string out;
    for (const auto& e : events) {
        out += format_event_line(e, schema);
        out += '\n';
    }
    return out;
}

} // namespace mgdvd
