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

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mgdvd {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<Matrix>;
using ConstMatrixMap = Eigen::Map<const Matrix>;
using VectorMap = Eigen::Map<Vector>;
using ConstVectorMap = Eigen::Map<const Vector>;

struct ModelHyperparams {
    int layers{3};         // K aggregation layers
    int rep_dim{64};       // d, representation-matrix dimension
    int hidden{300};       // hidden width, used only when hidden_layer is set
    int embed_dim{60};     // E, graph-embedding size
    double gamma{0.3};     // churn threshold for encoder dispatch
    double leaky_slope{0.01};
    bool hidden_layer{false};
    bool linear{false};    // identity in place of ReLU in the aggregator

    void validate() const;
    bool operator==(const ModelHyperparams&) const = default;
};

struct ParamSegment {
    std::string name;
    std::size_t offset{0};
    std::size_t rows{0};
    std::size_t cols{0};

    std::size_t size() const { return rows * cols; }
};

/// All trainable scalars in one flat buffer, addressed through named segments:
///   attention.w [1 x 2d], attention.b [1 x 1],
///   aggregator.w<k> [d x d] for k = 1..K, aggregator.eps [1 x K],
///   prior.proj [d x E],
///   hidden.w [H x d], hidden.b [1 x H]      (hidden_layer only)
///   output.w [E x d or E x H], output.b [1 x E]
/// The same type doubles as a gradient accumulator.
class ModelParams {
public:
    ModelParams() = default;
    /// Zero-filled parameters for the given shape.
    explicit ModelParams(const ModelHyperparams& hp);

    /// Seeded initialisation used for fresh models.
    static ModelParams initialize(const ModelHyperparams& hp, std::uint64_t seed);

    const ModelHyperparams& hyper() const { return hp_; }
    ModelHyperparams& hyper() { return hp_; }

    std::span<double> values() { return values_; }
    std::span<const double> values() const { return values_; }
    std::size_t size() const { return values_.size(); }

    const std::vector<ParamSegment>& segments() const { return segments_; }
    const ParamSegment& segment(std::string_view name) const;
    std::span<double> segment_values(std::string_view name);
    std::span<const double> segment_values(std::string_view name) const;

    void set_zero();

    ConstVectorMap attention_w() const;
    VectorMap attention_w();
    double attention_b() const;
    double& attention_b();
    ConstMatrixMap aggregator_w(int layer) const; // layer in 1..K
    MatrixMap aggregator_w(int layer);
    double aggregator_eps(int layer) const;
    double& aggregator_eps(int layer);
    ConstMatrixMap prior_proj() const;
    MatrixMap prior_proj();
    ConstMatrixMap hidden_w() const;
    MatrixMap hidden_w();
    ConstVectorMap hidden_b() const;
    VectorMap hidden_b();
    ConstMatrixMap output_w() const;
    MatrixMap output_w();
    ConstVectorMap output_b() const;
    VectorMap output_b();

    bool operator==(const ModelParams& other) const { return hp_ == other.hp_ && values_ == other.values_; }

private:
    ConstMatrixMap matrix(std::string_view name) const;
    MatrixMap matrix(std::string_view name);

    ModelHyperparams hp_;
    std::vector<ParamSegment> segments_;
    std::vector<double> values_;
};

/// Versioned text checkpoint; doubles are written in shortest round-trip form
/// so save/load is bit-exact.
std::string serialize_checkpoint(const ModelParams& params);
ModelParams parse_checkpoint(std::string_view text);
void save_checkpoint(const ModelParams& params, const std::string& path);
/// Throws Error(missing_checkpoint) when the file does not exist.
ModelParams load_checkpoint(const std::string& path);

} // namespace mgdvd
