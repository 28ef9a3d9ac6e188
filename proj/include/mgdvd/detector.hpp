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

#include "mgdvd/params.hpp"
#include "mgdvd/pipeline.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace mgdvd {

/// Population Pearson correlation, clamped to [-1, 1].
/// Errors: length_mismatch (different lengths or fewer than 2 entries),
/// zero_variance.
double pearson(const Vector& x, const Vector& y);

struct PearsonGradient {
    Vector dx;
    Vector dy;
};
PearsonGradient pearson_gradient(const Vector& x, const Vector& y);

/// True when pearson() would reject the vector for lack of spread.
bool degenerate_variance(const Vector& x);

struct GalleryEntry {
    std::string sample_id;
    std::string label;
    Vector embedding;
};

class Gallery {
public:
    /// Error(length_mismatch) for a wrong length, Error(zero_variance) for a
    /// constant embedding, Error(invalid_argument) for ids or labels that
    /// contain whitespace.
    void add(GalleryEntry entry);

    const std::vector<GalleryEntry>& entries() const { return entries_; }
    bool empty() const { return entries_.empty(); }
    std::size_t size() const { return entries_.size(); }

private:
    std::vector<GalleryEntry> entries_;
};

std::string serialize_gallery(const Gallery& gallery);
Gallery parse_gallery(std::string_view text);
void save_gallery(const Gallery& gallery, const std::string& path);
Gallery load_gallery(const std::string& path);

struct DetectorConfig {
    double tau{0.5};
    int consistency{2};
    bool keep_running{false};

    void validate() const;
};

enum class VerdictStatus { pending, provisional, final };

std::string_view to_string(VerdictStatus s);

struct Verdict {
    std::size_t window{0};
    VerdictStatus status{VerdictStatus::pending};
    std::string label;      // empty while pending
    double rho{0.0};        // best correlation in this window
    std::string best_match; // gallery sample behind rho
    int streak{0};          // consecutive windows agreeing on `label`
    double latency_ms{0.0};
};

struct Match {
    std::size_t entry{0};
    double rho{0.0};
};

/// Highest-correlation gallery entry; ties go to the smallest sample id.
/// Error(empty_gallery) when there is nothing to match.
Match best_match(const Vector& emb, const Gallery& gallery);

/// One detection step. `prior` is the previous window's verdict of the same
/// stream (nullptr at the first window); a final prior is carried forward.
Verdict classify_window(const Vector& emb, const Gallery& gallery, const DetectorConfig& cfg, const Verdict* prior,
                        std::size_t window);

/// `t|status|label|rho|latency_ms`; label is "-" while pending.
std::string format_verdict_line(const Verdict& v);

/// Windows the stream, encodes and classifies each one as it completes. Stops
/// after the first final verdict unless cfg.keep_running is set.
std::vector<Verdict> stream_detect(std::span<const Event> events, const ModelParams& params, const Gallery& gallery,
                                   const DetectorConfig& cfg, const PipelineConfig& pipeline, const Catalog& catalog);

/// Label a finished verdict log commits to: the final label if one was
/// reached, else the last provisional label, else empty.
std::string decided_label(std::span<const Verdict> verdicts);

} // namespace mgdvd
