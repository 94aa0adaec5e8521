#pragma once

#include <Eigen/Core>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "emdk/gram.hpp"
#include "emdk/ground.hpp"

namespace emdk {

enum class Variant { emd, emd_rubner, emdhat_alpha, emdhat_sink, emjd, emi, idk };

std::string to_string(Variant v);
Variant parse_variant(const std::string& name);
// emi and idk give kernels, the rest distances.
GramKind output_kind(Variant v);

// Ground distance, variant, then (distances only) exp(-u D), then an
// optional Tanimoto-type transform of the kernel.
struct PipelineSpec {
  std::string ground = "euclidean";  // euclidean | sqeuclidean | discrete | circle | file:PATH
  std::optional<double> threshold;
  Variant variant = Variant::emdhat_sink;
  std::optional<double> sink_flat;   // default: the ground bound (the threshold when set)
  std::optional<Point> sink_point;
  double alpha = 1.0;
  double idk_u = 1.0;
  std::string transform = "none";    // none | tanimoto | nested:N | pdize
  bool rbf = true;
  std::optional<double> rbf_u;       // unset: 1 / mean training distance
};

PipelineSpec pipeline_from_json(const nlohmann::json& j);
nlohmann::json pipeline_to_json(const PipelineSpec& spec);

GroundDistance make_ground(const PipelineSpec& spec);
SinkSpec make_sink(const PipelineSpec& spec, const GroundDistance& ground);
SetPairFunction make_pairwise(const PipelineSpec& spec);

// 64-bit FNV-1a of the compact JSON text, as 16 hex digits.
std::string hash_json(const nlohmann::json& j);

// Kernel stage parameters resolved on a training set.
struct KernelStages {
  std::optional<double> u;  // set when the base values are distances
  int nested = -1;          // -1: no transform; n >= 0: closed-form n-fold transform
};

// Applies rbf and transform to a rectangular block of base values, given
// base self-evaluations of the row and column items.
Eigen::MatrixXd apply_stages(const Eigen::MatrixXd& base, const Eigen::VectorXd& row_self,
                             const Eigen::VectorXd& col_self, const KernelStages& stages);

// Resolves u (training entries only) and the transform order, then maps the
// full square base matrix to a kernel matrix.
struct KernelBuild {
  GramMatrix kernel;
  KernelStages stages;
};
KernelBuild build_kernel(const GramMatrix& base, const PipelineSpec& spec,
                         const std::vector<std::size_t>& train_index);

}  // namespace emdk
