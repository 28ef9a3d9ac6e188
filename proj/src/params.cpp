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
#include "mgdvd/params.hpp"

#include "mgdvd/error.hpp"
#include "mgdvd/rng.hpp"
#include "mgdvd/text.hpp"

#include <cmath>
#include <filesystem>

namespace mgdvd {

namespace {

constexpr std::string_view kCheckpointMagic = "mgdvd-checkpoint";
constexpr int kCheckpointVersion = 1;

std::string layer_name(int k) { return "aggregator.w" + std::to_string(k); }

} // namespace

void ModelHyperparams::validate() const {
    if (layers < 1 || rep_dim < 1 || hidden < 1 || embed_dim < 1) {
        throw Error(Errc::invalid_argument, "layers, rep_dim, hidden and embed_dim must be >= 1");
    }
    if (!(gamma > 0.0 && gamma < 1.0)) {
        throw Error(Errc::invalid_argument, "gamma must lie in (0, 1)");
    }
    if (!std::isfinite(leaky_slope)) {
        throw Error(Errc::invalid_argument, "leaky_slope must be finite");
    }
}

ModelParams::ModelParams(const ModelHyperparams& hp) : hp_(hp) {
    hp_.validate();
    const auto d = static_cast<std::size_t>(hp.rep_dim);
    const auto e = static_cast<std::size_t>(hp.embed_dim);
    const auto h = static_cast<std::size_t>(hp.hidden);
    std::size_t offset = 0;
    auto add = [&](std::string name, std::size_t rows, std::size_t cols) {
        segments_.push_back({std::move(name), offset, rows, cols});
        offset += rows * cols;
    };
    add("attention.w", 1, 2 * d);
    add("attention.b", 1, 1);
    for (int k = 1; k <= hp.layers; ++k) {
        add(layer_name(k), d, d);
    }
    add("aggregator.eps", 1, static_cast<std::size_t>(hp.layers));
    add("prior.proj", d, e);
    if (hp.hidden_layer) {
        add("hidden.w", h, d);
        add("hidden.b", 1, h);
        add("output.w", e, h);
    } else {
        add("output.w", e, d);
    }
    add("output.b", 1, e);
    values_.assign(offset, 0.0);
}

ModelParams ModelParams::initialize(const ModelHyperparams& hp, std::uint64_t seed) {
    ModelParams p(hp);
    Rng rng(seed);
    const auto d = hp.rep_dim;
    auto fill_normal = [&](std::span<double> v, double stddev) {
        for (auto& x : v) {
            x = stddev * rng.normal();
        }
    };
    // Attention starts near-uniform with a mild preference for richer
    // per-meta-graph representations (positive weight on the own-view half).
    auto att = p.segment_values("attention.w");
    for (int i = 0; i < 2 * d; ++i) {
        att[static_cast<std::size_t>(i)] = (i < d ? 0.2 : 0.0) + 0.02 * rng.normal();
    }
    for (int k = 1; k <= hp.layers; ++k) {
        fill_normal(p.segment_values(layer_name(k)), 1.0 / std::sqrt(static_cast<double>(d)));
    }
    if (hp.hidden_layer) {
        fill_normal(p.segment_values("prior.proj"), 1.0 / std::sqrt(static_cast<double>(hp.embed_dim)));
        fill_normal(p.segment_values("hidden.w"), 1.0 / std::sqrt(static_cast<double>(d)));
        fill_normal(p.segment_values("output.w"), 1.0 / std::sqrt(static_cast<double>(hp.hidden)));
        return p;
    }
    fill_normal(p.segment_values("output.w"), 1.0 / std::sqrt(static_cast<double>(d)));
    // A window without dynamic neighbours then carries the prior embedding
    // forward unchanged: output.w * prior.proj / d = I (least squares if E > d).
    const Eigen::MatrixXd out = p.output_w();
    p.prior_proj() = static_cast<double>(d) * out.completeOrthogonalDecomposition().pseudoInverse();
    return p;
}

const ParamSegment& ModelParams::segment(std::string_view name) const {
    for (const auto& s : segments_) {
        if (s.name == name) {
            return s;
        }
    }
    throw Error(Errc::invalid_argument, "no parameter segment '" + std::string(name) + "'");
}

std::span<double> ModelParams::segment_values(std::string_view name) {
    const auto& s = segment(name);
    return std::span<double>(values_).subspan(s.offset, s.size());
}

std::span<const double> ModelParams::segment_values(std::string_view name) const {
    const auto& s = segment(name);
    return std::span<const double>(values_).subspan(s.offset, s.size());
}

void ModelParams::set_zero() { std::fill(values_.begin(), values_.end(), 0.0); }

ConstMatrixMap ModelParams::matrix(std::string_view name) const {
    const auto& s = segment(name);
    return {values_.data() + s.offset, static_cast<Eigen::Index>(s.rows), static_cast<Eigen::Index>(s.cols)};
}

MatrixMap ModelParams::matrix(std::string_view name) {
    const auto& s = segment(name);
    return {values_.data() + s.offset, static_cast<Eigen::Index>(s.rows), static_cast<Eigen::Index>(s.cols)};
}

ConstVectorMap ModelParams::attention_w() const {
    const auto& s = segment("attention.w");
    return {values_.data() + s.offset, static_cast<Eigen::Index>(s.size())};
}
VectorMap ModelParams::attention_w() {
    const auto& s = segment("attention.w");
    return {values_.data() + s.offset, static_cast<Eigen::Index>(s.size())};
}
double ModelParams::attention_b() const { return values_[segment("attention.b").offset]; }
double& ModelParams::attention_b() { return values_[segment("attention.b").offset]; }
ConstMatrixMap ModelParams::aggregator_w(int layer) const { return matrix(layer_name(layer)); }
MatrixMap ModelParams::aggregator_w(int layer) { return matrix(layer_name(layer)); }
double ModelParams::aggregator_eps(int layer) const {
    return values_[segment("aggregator.eps").offset + static_cast<std::size_t>(layer - 1)];
}
double& ModelParams::aggregator_eps(int layer) {
    return values_[segment("aggregator.eps").offset + static_cast<std::size_t>(layer - 1)];
}
ConstMatrixMap ModelParams::prior_proj() const { return matrix("prior.proj"); }
MatrixMap ModelParams::prior_proj() { return matrix("prior.proj"); }
ConstMatrixMap ModelParams::hidden_w() const { return matrix("hidden.w"); }
MatrixMap ModelParams::hidden_w() { return matrix("hidden.w"); }
ConstVectorMap ModelParams::hidden_b() const {
    const auto& s = segment("hidden.b");
    return {values_.data() + s.offset, static_cast<Eigen::Index>(s.size())};
}
VectorMap ModelParams::hidden_b() {
    const auto& s = segment("hidden.b");
    return {values_.data() + s.offset, static_cast<Eigen::Index>(s.size())};
}
ConstMatrixMap ModelParams::output_w() const { return matrix("output.w"); }
MatrixMap ModelParams::output_w() { return matrix("output.w"); }
ConstVectorMap ModelParams::output_b() const {
    const auto& s = segment("output.b");
    return {values_.data() + s.offset, static_cast<Eigen::Index>(s.size())};
}
VectorMap ModelParams::output_b() {
    const auto& s = segment("output.b");
    return {values_.data() + s.offset, static_cast<Eigen::Index>(s.size())};
}

std::string serialize_checkpoint(const ModelParams& params) {
    const auto& hp = params.hyper();
    std::string out = std::string(kCheckpointMagic) + " " + std::to_string(kCheckpointVersion) + "\n";
    out += "layers " + std::to_string(hp.layers) + "\n";
    out += "rep_dim " + std::to_string(hp.rep_dim) + "\n";
    out += "hidden " + std::to_string(hp.hidden) + "\n";
    out += "embed_dim " + std::to_string(hp.embed_dim) + "\n";
    out += "gamma " + text::format_double(hp.gamma) + "\n";
    out += "leaky_slope " + text::format_double(hp.leaky_slope) + "\n";
    out += "hidden_layer " + std::to_string(hp.hidden_layer ? 1 : 0) + "\n";
    out += "linear " + std::to_string(hp.linear ? 1 : 0) + "\n";
    const auto values = params.values();
    for (const auto& s : params.segments()) {
        out += "param " + s.name + " " + std::to_string(s.rows) + " " + std::to_string(s.cols) + "\n";
        for (std::size_t r = 0; r < s.rows; ++r) {
            for (std::size_t c = 0; c < s.cols; ++c) {
                if (c > 0) {
                    out += ' ';
                }
                out += text::format_double(values[s.offset + r * s.cols + c]);
            }
            out += '\n';
        }
    }
    out += "end\n";
    return out;
}

ModelParams parse_checkpoint(std::string_view text_in) {
    auto lines = text::split(text_in, '\n');
    std::size_t i = 0;
    auto next = [&]() -> std::vector<std::string_view> {
        while (i < lines.size()) {
            auto tok = text::tokenize(text::trim(lines[i++]));
            if (!tok.empty()) {
                return tok;
            }
        }
        throw Error(Errc::parse_error, "checkpoint truncated");
    };
    auto head = next();
    if (head.size() != 2 || head[0] != kCheckpointMagic || head[1] != std::to_string(kCheckpointVersion)) {
        throw Error(Errc::parse_error, "not a version-1 checkpoint");
    }
    ModelHyperparams hp;
    auto int_field = [&](std::string_view key) {
        auto tok = next();
        auto v = tok.size() == 2 && tok[0] == key ? text::parse_int(tok[1]) : std::nullopt;
        if (!v) {
            throw Error(Errc::parse_error, "checkpoint: expected '" + std::string(key) + "'");
        }
        return static_cast<int>(*v);
    };
    auto double_field = [&](std::string_view key) {
        auto tok = next();
        auto v = tok.size() == 2 && tok[0] == key ? text::parse_double(tok[1]) : std::nullopt;
        if (!v) {
            throw Error(Errc::parse_error, "checkpoint: expected '" + std::string(key) + "'");
        }
        return *v;
    };
    hp.layers = int_field("layers");
    hp.rep_dim = int_field("rep_dim");
    hp.hidden = int_field("hidden");
    hp.embed_dim = int_field("embed_dim");
    hp.gamma = double_field("gamma");
    hp.leaky_slope = double_field("leaky_slope");
    hp.hidden_layer = int_field("hidden_layer") != 0;
    hp.linear = int_field("linear") != 0;

    ModelParams params(hp);
    auto values = params.values();
    for (const auto& s : params.segments()) {
        auto tok = next();
        if (tok.size() != 4 || tok[0] != "param" || tok[1] != s.name ||
            text::parse_int(tok[2]) != static_cast<long long>(s.rows) ||
            text::parse_int(tok[3]) != static_cast<long long>(s.cols)) {
            throw Error(Errc::parse_error, "checkpoint: expected segment " + s.name);
        }
        for (std::size_t r = 0; r < s.rows; ++r) {
            auto row = next();
            if (row.size() != s.cols) {
                throw Error(Errc::parse_error, "checkpoint: bad row in " + s.name);
            }
            for (std::size_t c = 0; c < s.cols; ++c) {
                auto v = text::parse_double(row[c]);
                if (!v || !std::isfinite(*v)) {
                    throw Error(Errc::parse_error, "checkpoint: bad value in " + s.name);
                }
                values[s.offset + r * s.cols + c] = *v;
            }
        }
    }
    auto tail = next();
    if (tail.size() != 1 || tail[0] != "end") {
        throw Error(Errc::parse_error, "checkpoint: missing 'end'");
    }
    return params;
}

void save_checkpoint(const ModelParams& params, const std::string& path) {
    text::write_file(path, serialize_checkpoint(params));
}

ModelParams load_checkpoint(const std::string& path) {
    if (!std::filesystem::exists(path)) {
        throw Error(Errc::missing_checkpoint, path);
    }
    return parse_checkpoint(text::read_file(path));
}

} // namespace mgdvd
