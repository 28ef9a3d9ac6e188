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

#include <stdexcept>
#include <string>
#include <string_view>

namespace mgdvd {

enum class Errc {
    // input / format
    malformed_record,
    unknown_entity_type,
    unknown_relation_type,
    schema_violation,
    degenerate_schema,
    dangling_endpoint,
    out_of_order_stream,
    parse_error,
    not_a_dag,
    multiple_sources,
    multiple_targets,
    non_process_endpoint,
    io_error,
    invalid_argument,
    // model
    empty_graph,
    root_not_in_graph,
    missing_node_state,
    length_mismatch,
    empty_neighbor_set,
    zero_variance,
    insufficient_families,
    divergence,
    empty_gallery,
    missing_checkpoint,
    // internal
    invariant_violation,
};

std::string_view to_string(Errc code);

/// Process exit code for an error: 2 input/format, 3 model, 4 internal invariant.
int exit_code(Errc code);

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what);

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

} // namespace mgdvd
