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
#include "mgdvd/detector.hpp"

#include "mgdvd/error.hpp"
#include "mgdvd/text.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>

namespace mgdvd {

namespace {

constexpr std::string_view kGalleryMagic = "mgdvd-gallery";
constexpr int kGalleryVersion = 1;

void check_pair(const Vector& x, const Vector& y) {
    if (x.size() != y.size() || x.size() < 2) {
        throw Error(Errc::length_mismatch,
                    "pearson needs two vectors of equal length >= 2, got " + std::to_string(x.size()) + " and " +
                        std::to_string(y.size()));
    }
    if (degenerate_variance(x) || degenerate_variance(y)) {
        throw Error(Errc::zero_variance, "pearson of a constant vector");
    }
}

bool has_space(std::string_view s) {
    return s.empty() || s.find_first_of(" \t\r\n") != std::string_view::npos;
}

} // namespace

bool degenerate_variance(const Vector& x) {
    if (x.size() == 0) {
        return true;
    }
    const Vector centered = x.array() - x.mean();
    const double spread = centered.squaredNorm();
    return !(spread > 1e-24 * std::max(x.squaredNorm(), 1e-300));
}

double pearson(const Vector& x, const Vector& y) {
    check_pair(x, y);
    const Vector a = x.array() - x.mean();
    const Vector b = y.array() - y.mean();
    const double rho = a.dot(b) / std::sqrt(a.squaredNorm() * b.squaredNorm());
    return std::clamp(rho, -1.0, 1.0);
}

PearsonGradient pearson_gradient(const Vector& x, const Vector& y) {
    check_pair(x, y);
    const Vector a = x.array() - x.mean();
    const Vector b = y.array() - y.mean();
    const double aa = a.squaredNorm();
    const double bb = b.squaredNorm();
    const double norm = std::sqrt(aa * bb);
    const double rho = a.dot(b) / norm;
    return {b / norm - (rho / aa) * a, a / norm - (rho / bb) * b};
}

void Gallery::add(GalleryEntry entry) {
    if (has_space(entry.sample_id) || has_space(entry.label)) {
        throw Error(Errc::invalid_argument, "gallery ids and labels must be non-empty and free of whitespace");
    }
    if (!entries_.empty() && entries_.front().embedding.size() != entry.embedding.size()) {
        throw Error(Errc::length_mismatch, "gallery embedding of " + entry.sample_id);
    }
    if (degenerate_variance(entry.embedding)) {
        throw Error(Errc::zero_variance, "gallery embedding of " + entry.sample_id);
    }
    entries_.push_back(std::move(entry));
}

std::string serialize_gallery(const Gallery& gallery) {
    std::string out = std::string(kGalleryMagic) + " " + std::to_string(kGalleryVersion) + "\n";
    const auto dim = gallery.empty() ? 0 : gallery.entries().front().embedding.size();
    out += "dim " + std::to_string(dim) + "\n";
    for (const auto& e : gallery.entries()) {
        out += "entry " + e.sample_id + " " + e.label;
        for (Eigen::Index i = 0; i < e.embedding.size(); ++i) {
            out += ' ';
            out += text::format_double(e.embedding[i]);
        }
        out += '\n';
    }
    out += "end\n";
    return out;
}

Gallery parse_gallery(std::string_view text_in) {
    Gallery g;
    std::size_t dim = 0;
    bool header = false;
    bool ended = false;
    for (auto raw : text::split(text_in, '\n')) {
        auto tok = text::tokenize(text::trim(raw));
        if (tok.empty()) {
            continue;
        }
        if (ended) {
            throw Error(Errc::parse_error, "gallery: content after end");
        }
        if (!header) {
            if (tok.size() != 2 || tok[0] != kGalleryMagic || text::parse_int(tok[1]) != kGalleryVersion) {
                throw Error(Errc::parse_error, "gallery: bad header");
            }
            header = true;
        } else if (tok[0] == "dim" && tok.size() == 2) {
            auto v = text::parse_int(tok[1]);
            if (!v || *v < 0) {
                throw Error(Errc::parse_error, "gallery: bad dim");
            }
            dim = static_cast<std::size_t>(*v);
        } else if (tok[0] == "entry") {
            if (tok.size() != 3 + dim) {
                throw Error(Errc::parse_error, "gallery: entry with wrong number of values");
            }
            GalleryEntry e{std::string(tok[1]), std::string(tok[2]), Vector(static_cast<Eigen::Index>(dim))};
            for (std::size_t i = 0; i < dim; ++i) {
                auto v = text::parse_double(tok[3 + i]);
                if (!v) {
                    throw Error(Errc::parse_error, "gallery: bad value '" + std::string(tok[3 + i]) + "'");
                }
                e.embedding[static_cast<Eigen::Index>(i)] = *v;
            }
            g.add(std::move(e));
        } else if (tok[0] == "end" && tok.size() == 1) {
            ended = true;
        } else {
            throw Error(Errc::parse_error, "gallery: unexpected '" + std::string(tok[0]) + "'");
        }
    }
    if (!ended) {
        throw Error(Errc::parse_error, "gallery truncated");
    }
    return g;
}

void save_gallery(const Gallery& gallery, const std::string& path) {
    text::write_file(path, serialize_gallery(gallery));
}

Gallery load_gallery(const std::string& path) {
    if (!std::filesystem::exists(path)) {
        throw Error(Errc::empty_gallery, "no gallery at " + path);
    }
    return parse_gallery(text::read_file(path));
}

void DetectorConfig::validate() const {
    if (!(tau > -1.0 && tau <= 1.0)) {
        throw Error(Errc::invalid_argument, "tau must lie in (-1, 1]");
    }
    if (consistency < 1) {
        throw Error(Errc::invalid_argument, "consistency window must be at least 1");
    }
}

std::string_view to_string(VerdictStatus s) {
    switch (s) {
    case VerdictStatus::pending:
        return "pending";
    case VerdictStatus::provisional:
        return "provisional";
    case VerdictStatus::final:
        return "final";
    }
    return "?";
}

Match best_match(const Vector& emb, const Gallery& gallery) {
    if (gallery.empty()) {
        throw Error(Errc::empty_gallery, "nothing to match against");
    }
    const auto& entries = gallery.entries();
    Match best{0, pearson(emb, entries[0].embedding)};
    for (std::size_t i = 1; i < entries.size(); ++i) {
        const double rho = pearson(emb, entries[i].embedding);
        if (rho > best.rho || (rho == best.rho && entries[i].sample_id < entries[best.entry].sample_id)) {
            best = {i, rho};
        }
    }
    return best;
}

Verdict classify_window(const Vector& emb, const Gallery& gallery, const DetectorConfig& cfg, const Verdict* prior,
                        std::size_t window) {
    if (prior != nullptr && prior->status == VerdictStatus::final) {
        Verdict carried = *prior;
        carried.window = window;
        carried.latency_ms = 0.0;
        return carried;
    }
    if (gallery.empty()) {
        throw Error(Errc::empty_gallery, "nothing to match against");
    }
    Verdict v;
    v.window = window;
    if (degenerate_variance(emb)) {
        return v;
    }
    const auto m = best_match(emb, gallery);
    const auto& entry = gallery.entries()[m.entry];
    v.rho = m.rho;
    v.best_match = entry.sample_id;
    if (m.rho < cfg.tau) {
        return v;
    }
    v.label = entry.label;
    v.streak = 1;
    if (prior != nullptr && prior->status == VerdictStatus::provisional && prior->label == v.label) {
        v.streak = prior->streak + 1;
    }
    v.status = v.streak >= cfg.consistency ? VerdictStatus::final : VerdictStatus::provisional;
    return v;
}

std::string format_verdict_line(const Verdict& v) {
    return fmt::format("{}|{}|{}|{:.6f}|{:.3f}", v.window, to_string(v.status), v.label.empty() ? "-" : v.label,
                       v.rho, v.latency_ms);
}

std::vector<Verdict> stream_detect(std::span<const Event> events, const ModelParams& params, const Gallery& gallery,
                                   const DetectorConfig& cfg, const PipelineConfig& pipeline, const Catalog& catalog) {
    cfg.validate();
    if (gallery.empty()) {
        throw Error(Errc::empty_gallery, "nothing to match against");
    }
    using Clock = std::chrono::steady_clock;
    std::vector<Verdict> out;
    StreamAnalyzer analyzer(pipeline, catalog);
    Vector prior = Vector::Zero(params.hyper().embed_dim);
    bool stop = false;

    auto drain = [&] {
        while (!stop) {
            const auto t0 = Clock::now();
            auto w = analyzer.next();
            if (!w) {
                return;
            }
            prior = encode_window(params, w->input, prior);
            Verdict v = classify_window(prior, gallery, cfg, out.empty() ? nullptr : &out.back(), w->index);
            v.latency_ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
            stop = v.status == VerdictStatus::final && !cfg.keep_running;
            out.push_back(std::move(v));
        }
    };

    for (const auto& e : events) {
        if (stop) {
            break;
        }
        analyzer.push(e);
        drain();
    }
    if (!stop) {
        analyzer.finish();
        drain();
    }
    return out;
}

std::string decided_label(std::span<const Verdict> verdicts) {
    std::string label;
    for (const auto& v : verdicts) {
        if (v.status == VerdictStatus::final) {
            return v.label;
        }
        if (v.status == VerdictStatus::provisional) {
            label = v.label;
        }
    }
    return label;
}

} // namespace mgdvd
