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

namespace mgdvd {

std::string_view to_string(Errc code) {
    switch (code) {
    case Errc::malformed_record: return "malformed-record";
    case Errc::unknown_entity_type: return "unknown-entity-type";
    case Errc::unknown_relation_type: return "unknown-relation-type";
    case Errc::schema_violation: return "schema-violation";
    case Errc::degenerate_schema: return "degenerate-schema";
    case Errc::dangling_endpoint: return "dangling-endpoint";
    case Errc::out_of_order_stream: return "out-of-order-stream";
    case Errc::parse_error: return "parse-error";
    case Errc::not_a_dag: return "not-a-DAG";
    case Errc::multiple_sources: return "multiple-sources";
    case Errc::multiple_targets: return "multiple-targets";
    case Errc::non_process_endpoint: return "non-process-endpoint";
    case Errc::io_error: return "io-error";
    case Errc::invalid_argument: return "invalid-argument";
    case Errc::empty_graph: return "empty-graph";
    case Errc::root_not_in_graph: return "root-not-in-graph";
    case Errc::missing_node_state: return "missing-node-state";
    case Errc::length_mismatch: return "length-mismatch";
    case Errc::empty_neighbor_set: return "empty-neighbor-set";
    case Errc::zero_variance: return "zero-variance";
    case Errc::insufficient_families: return "insufficient-families";
    case Errc::divergence: return "divergence";
    case Errc::empty_gallery: return "empty-gallery";
    case Errc::missing_checkpoint: return "missing-checkpoint";
    case Errc::invariant_violation: return "invariant-violation";
    }
    return "unknown";
}

int exit_code(Errc code) {
    switch (code) {
    case Errc::malformed_record:
    case Errc::unknown_entity_type:
    case Errc::unknown_relation_type:
    case Errc::schema_violation:
    case Errc::degenerate_schema:
    case Errc::dangling_endpoint:
    case Errc::out_of_order_stream:
    case Errc::parse_error:
    case Errc::not_a_dag:
    case Errc::multiple_sources:
    case Errc::multiple_targets:
    case Errc::non_process_endpoint:
    case Errc::io_error:
    case Errc::invalid_argument:
        return 2;
    case Errc::invariant_violation:
        return 4;
    default:
        return 3;
    }
}

Error::Error(Errc code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

} // namespace mgdvd
