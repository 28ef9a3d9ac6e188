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
#include "mgdvd/error.hpp"
#include "mgdvd/event.hpp"
#include "mgdvd/rng.hpp"
#include "mgdvd/text.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace mgdvd;

namespace {

Errc parse_error_of(std::string_view line) {
    try {
        parse_event_line(line);
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "accepted: " << line;
    return Errc::invariant_violation;
}

} // namespace

TEST(EventParse, FieldsMapDirectly) {
    auto e = parse_event_line("12.5|proc:P1|proc_open_file|file:F1|s001");
    EXPECT_EQ(e.timestamp, 12.5);
    EXPECT_EQ(e.src, (EntityRef{EntityType::process, "P1"}));
    EXPECT_EQ(default_schema().relation(e.rel).name, "proc_open_file");
    EXPECT_EQ(e.dst, (EntityRef{EntityType::file, "F1"}));
    EXPECT_EQ(e.sample_id, "s001");
}

TEST(EventParse, ReversedEndpointsViolateSchema) {
    EXPECT_EQ(parse_error_of("12.5|file:F1|proc_open_file|proc:P1|s001"), Errc::schema_violation);
}

TEST(EventParse, NonNumericTimestamp) {
    EXPECT_EQ(parse_error_of("abc|proc:P1|proc_open_file|file:F1|s001"), Errc::malformed_record);
}

TEST(EventParse, OtherMalformedRecords) {
    EXPECT_EQ(parse_error_of("1|proc:P1|proc_open_file|file:F1"), Errc::malformed_record);
    EXPECT_EQ(parse_error_of("1|sock:P1|proc_open_file|file:F1|s"), Errc::unknown_entity_type);
    EXPECT_EQ(parse_error_of("1|proc:P1|proc_eat_file|file:F1|s"), Errc::unknown_relation_type);
    EXPECT_EQ(parse_error_of("1|procP1|proc_open_file|file:F1|s"), Errc::malformed_record);
}

TEST(EventParse, LongTypeNamesAndCarriageReturn) {
    auto e = parse_event_line("3|process:P|proc_connect_network|network:10.0.0.1:80|x\r");
    EXPECT_EQ(e.dst.type, EntityType::network);
    EXPECT_EQ(e.dst.id, "10.0.0.1:80");
    EXPECT_EQ(e.sample_id, "x");
}

TEST(EventStream, RejectsDecreasingTimestampsWithinSample) {
    std::istringstream in("2|proc:P|proc_open_file|file:F|a\n1|proc:P|proc_open_file|file:F|a\n");
    try {
        read_events(in);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::out_of_order_stream);
    }
}

TEST(EventStream, SkipsBlankAndCommentLines) {
    std::istringstream in("# header\n\n1|proc:P|proc_open_file|file:F|a\n");
    EXPECT_EQ(read_events(in).size(), 1u);
}

TEST(EventStream, GoldenFileIsCanonical) {
    const auto text = text::read_file(std::string(MGDVD_TEST_DATA) + "/sample.events");
    const auto events = load_events(std::string(MGDVD_TEST_DATA) + "/sample.events");
    EXPECT_EQ(events.size(), 12u);
    EXPECT_EQ(serialize_events(events), text);
}

TEST(EventProperty, RoundTripIsIdentityOnCanonicalLines) {
    Rng rng(11);
    const auto events = support::random_stream(rng, 500, 30, 1000.0);
    for (const auto& e : events) {
        const auto line = format_event_line(e);
        const auto back = parse_event_line(line);
        EXPECT_EQ(back, e);
        EXPECT_EQ(format_event_line(back), line);
    }
}

TEST(EventProperty, NormalisesTimestampAndTokens) {
    EXPECT_EQ(format_event_line(parse_event_line("1.50|process:P|proc_read_file|file:F|s")),
              "1.5|proc:P|proc_read_file|file:F|s");
}

TEST(EventProperty, AcceptedEventsRespectRelationTyping) {
    Rng rng(5);
    const auto& schema = default_schema();
    const std::vector<std::string> types{"proc", "file", "mem", "reg", "sys", "mutex", "attr", "net", "x"};
    std::size_t accepted = 0;
    for (int i = 0; i < 5000; ++i) {
        const auto& rel = schema.relation(static_cast<RelationId>(rng.below(schema.relation_count()))).name;
        std::string line = std::to_string(rng.below(100)) + "|" + types[rng.below(types.size())] + ":a|" + rel + "|" +
                           types[rng.below(types.size())] + ":b|s";
        try {
            auto e = parse_event_line(line);
            ++accepted;
            EXPECT_EQ(e.src.type, schema.relation(e.rel).src) << line;
            EXPECT_EQ(e.dst.type, schema.relation(e.rel).dst) << line;
        } catch (const Error& e) {
            EXPECT_EQ(exit_code(e.code()), 2);
        }
    }
    EXPECT_GT(accepted, 0u);
}

TEST(Schema, DefaultIsValid) {
    EXPECT_NO_THROW(validate_schema(default_schema()));
    EXPECT_EQ(default_schema().entity_types().size(), 8u);
    EXPECT_EQ(default_schema().relation_count(), 10u);
}

TEST(Schema, SingleEntityTypeIsDegenerate) {
    NetworkSchema s({EntityType::process}, {{"a", EntityType::process, EntityType::process},
                                            {"b", EntityType::process, EntityType::process}});
    try {
        validate_schema(s);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::degenerate_schema);
    }
}

TEST(Schema, UndeclaredTypeIsDangling) {
    try {
        parse_schema("entity process\nentity file\nrelation a process file\nrelation b process socket\n");
        FAIL();
    } catch (const Error& e) {
        EXPECT_TRUE(e.code() == Errc::dangling_endpoint || e.code() == Errc::unknown_entity_type);
    }
    NetworkSchema s({EntityType::process, EntityType::file},
                    {{"a", EntityType::process, EntityType::file}, {"b", EntityType::process, EntityType::network}});
    try {
        validate_schema(s);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::dangling_endpoint);
    }
}

TEST(Schema, SerialisationRoundTrips) {
    EXPECT_EQ(parse_schema(serialize_schema(default_schema())), default_schema());
}

TEST(Errors, ExitCodesByCategory) {
    EXPECT_EQ(exit_code(Errc::malformed_record), 2);
    EXPECT_EQ(exit_code(Errc::io_error), 2);
    EXPECT_EQ(exit_code(Errc::missing_checkpoint), 3);
    EXPECT_EQ(exit_code(Errc::divergence), 3);
    EXPECT_EQ(exit_code(Errc::invariant_violation), 4);
}
