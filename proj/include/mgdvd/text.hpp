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

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mgdvd::text {

std::vector<std::string_view> split(std::string_view s, char sep);

/// Splits on runs of spaces/tabs, dropping empty tokens.
std::vector<std::string_view> tokenize(std::string_view s);

std::string_view trim(std::string_view s);

/// Shortest decimal form that parses back to the identical double.
std::string format_double(double v);

std::optional<double> parse_double(std::string_view s);
std::optional<long long> parse_int(std::string_view s);

/// Reads a whole file; throws Error(io_error) on failure.
std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);

} // namespace mgdvd::text
