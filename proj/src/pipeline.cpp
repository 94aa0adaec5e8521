#include "emdk/pipeline.hpp"

#include <cmath>
#include <cstdio>

#include "emdk/errors.hpp"
#include "emdk/io.hpp"
#include "emdk/transform.hpp"
#include "emdk/transport.hpp"

namespace emdk {

std::string to_string(Variant v) {
  switch (v) {
    case Variant::emd: return "emd";
    case Variant::emd_rubner: return "emd-rubner";
    case Variant::emdhat_alpha: return "emdhat-alpha";
    case Variant::emdhat_sink: return "emdhat-sink";
    case Variant::emjd: return "emjd";
    case Variant::emi: return "emi";
    case Variant::idk: return "idk";
  }
  return "emd";
}

Variant parse_variant(const std::string& name) {
  for (Variant v : {Variant::emd, Variant::emd_rubner, Variant::emdhat_alpha, Variant::emdhat_sink,
                    Variant::emjd, Variant::emi, Variant::idk}) {
    if (to_string(v) == name) return v;
  }
  throw InputError("unknown variant '" + name + "'");
}

GramKind output_kind(Variant v) {
  return (v == Variant::emi || v == Variant::idk) ? GramKind::kernel : GramKind::distance;
}

PipelineSpec pipeline_from_json(const nlohmann::json& j) {
  PipelineSpec s;
  if (!j.is_object()) throw InputError("pipeline must be a JSON object");
  for (const auto& [key, val] : j.items()) {
    if (key == "ground") {
      s.ground = val.get<std::string>();
    } else if (key == "threshold") {
      if (!val.is_null()) s.threshold = val.get<double>();
    } else if (key == "variant") {
      s.variant = parse_variant(val.get<std::string>());
    } else if (key == "sink_flat") {
      if (!val.is_null()) s.sink_flat = val.get<double>();
    } else if (key == "sink_point") {
      if (!val.is_null()) s.sink_point = val.get<Point>();
    } else if (key == "alpha") {
      s.alpha = val.get<double>();
    } else if (key == "idk_u") {
      s.idk_u = val.get<double>();
    } else if (key == "transform") {
      s.transform = val.get<std::string>();
    } else if (key == "rbf") {
      s.rbf = val.get<bool>();
    } else if (key == "rbf_u") {
      if (!val.is_null()) s.rbf_u = val.get<double>();
    } else {
      throw InputError("unknown pipeline key '" + key + "'");
    }
  }
  return s;
}

nlohmann::json pipeline_to_json(const PipelineSpec& s) {
  nlohmann::json j;
  j["ground"] = s.ground;
  j["threshold"] = s.threshold ? nlohmann::json(*s.threshold) : nlohmann::json(nullptr);
  j["variant"] = to_string(s.variant);
  j["sink_flat"] = s.sink_flat ? nlohmann::json(*s.sink_flat) : nlohmann::json(nullptr);
  j["sink_point"] = s.sink_point ? nlohmann::json(*s.sink_point) : nlohmann::json(nullptr);
  j["alpha"] = s.alpha;
  j["idk_u"] = s.idk_u;
  j["transform"] = s.transform;
  j["rbf"] = s.rbf;
  j["rbf_u"] = s.rbf_u ? nlohmann::json(*s.rbf_u) : nlohmann::json(nullptr);
  return j;
}

GroundDistance make_ground(const PipelineSpec& spec) {
  GroundDistance g;
  const std::string& k = spec.ground;
  if (k == "euclidean") {
    g = GroundDistance::euclidean();
  } else if (k == "sqeuclidean") {
    g = GroundDistance::squared_euclidean();
  } else if (k == "discrete") {
    g = GroundDistance::discrete();
  } else if (k == "circle") {
    g = GroundDistance::circle();
  } else if (k.rfind("file:", 0) == 0) {
    const LabeledMatrix m = read_matrix_csv(k.substr(5));
    if (m.values.rows() != m.values.cols()) throw InputError(k + ": ground matrix must be square");
    g = GroundDistance::precomputed(m.values);
  } else {
    throw InputError("unknown ground distance '" + k + "'");
  }
  if (spec.threshold) g = g.thresholded(*spec.threshold);
  return g;
}

SinkSpec make_sink(const PipelineSpec& spec, const GroundDistance& ground) {
  if (spec.sink_point && spec.sink_flat) throw InputError("give either a flat sink rate or a sink point, not both");
  if (spec.sink_point) return SinkSpec::point(*spec.sink_point);
  if (spec.sink_flat) return SinkSpec::flat_rate(*spec.sink_flat);
  if (auto b = ground.bound()) return SinkSpec::flat_rate(*b);
  throw InputError("unbounded ground distance: set a flat sink rate, a sink point, or a threshold");
}

SetPairFunction make_pairwise(const PipelineSpec& spec) {
  const GroundDistance g = make_ground(spec);
  switch (spec.variant) {
    case Variant::emd:
      return [g](const WeightedPointSet& a, const WeightedPointSet& b) { return emd(a, b, g).cost; };
    case Variant::emd_rubner:
      return [g](const WeightedPointSet& a, const WeightedPointSet& b) { return emd_rubner(a, b, g); };
    case Variant::emdhat_alpha: {
      const double alpha = spec.alpha;
      if (!g.bound()) throw InputError("emdhat-alpha needs a bounded ground distance (set a threshold)");
      return [g, alpha](const WeightedPointSet& a, const WeightedPointSet& b) {
        return emdhat_alpha(a, b, g, alpha);
      };
    }
    case Variant::emdhat_sink: {
      const SinkSpec sink = make_sink(spec, g);
      return [g, sink](const WeightedPointSet& a, const WeightedPointSet& b) { return emdhat_p(a, b, g, sink); };
    }
    case Variant::emjd: {
      const SinkSpec sink = make_sink(spec, g);
      return [g, sink](const WeightedPointSet& a, const WeightedPointSet& b) {
        const double dab = emdhat_p(a, b, g, sink);
        const WeightedPointSet none;
        const double dnn = emdhat_p(none, none, g, sink);
        return biotope(dab, emdhat_p(a, a, g, sink), emdhat_p(b, b, g, sink), emdhat_to_empty(a, g, sink),
                       emdhat_to_empty(b, g, sink), dnn);
      };
    }
    case Variant::emi: {
      const SinkSpec sink = make_sink(spec, g);
      return [g, sink](const WeightedPointSet& a, const WeightedPointSet& b) { return emi(a, b, g, sink); };
    }
    case Variant::idk: {
      const double u = spec.idk_u;
      return [g, u](const WeightedPointSet& a, const WeightedPointSet& b) { return idk(a, b, g, u); };
    }
  }
  throw InputError("unknown variant");
}

std::string hash_json(const nlohmann::json& j) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : j.dump()) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Eigen::MatrixXd apply_stages(const Eigen::MatrixXd& base, const Eigen::VectorXd& row_self,
                             const Eigen::VectorXd& col_self, const KernelStages& stages) {
  if (base.rows() != row_self.size() || base.cols() != col_self.size()) {
    throw DimensionMismatch("self-evaluations do not match the block size");
  }
  Eigen::MatrixXd k = base;
  Eigen::VectorXd rs = row_self;
  Eigen::VectorXd cs = col_self;
  if (stages.u) {
    const double u = *stages.u;
    k = (-u * base.array()).exp().matrix();
    rs = (-u * row_self.array()).exp().matrix();
    cs = (-u * col_self.array()).exp().matrix();
  }
  if (stages.nested >= 0) {
    for (Eigen::Index i = 0; i < k.rows(); ++i) {
      for (Eigen::Index j = 0; j < k.cols(); ++j) k(i, j) = tanimoto_nested(k(i, j), rs(i), cs(j), stages.nested);
    }
  }
  return k;
}

KernelBuild build_kernel(const GramMatrix& base, const PipelineSpec& spec,
                         const std::vector<std::size_t>& train_index) {
  KernelBuild out;
  if (base.kind() == GramKind::distance) {
    if (!spec.rbf) throw InputError("rbf stage: a distance pipeline needs rbf to produce a kernel");
    out.stages.u = spec.rbf_u ? *spec.rbf_u : auto_rbf_scale(base.values(), train_index);
  }
  const std::string& t = spec.transform;
  bool pdize = false;
  if (t == "none") {
  } else if (t == "tanimoto") {
    out.stages.nested = 1;
  } else if (t.rfind("nested:", 0) == 0) {
    try {
      out.stages.nested = std::stoi(t.substr(7));
    } catch (const std::exception&) {
      throw InputError("transform stage: bad nesting depth in '" + t + "'");
    }
    if (out.stages.nested < 0) throw InputError("transform stage: nesting depth must be >= 0");
  } else if (t == "pdize") {
    pdize = true;
  } else {
    throw InputError("transform stage: unknown transform '" + t + "'");
  }
  const Eigen::VectorXd self = base.values().diagonal();
  Eigen::MatrixXd k = apply_stages(base.values(), self, self, out.stages);
  if (pdize) {
    Eigen::MatrixXd train(train_index.size(), train_index.size());
    for (std::size_t i = 0; i < train_index.size(); ++i) {
      for (std::size_t j = 0; j < train_index.size(); ++j) {
        train(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
            k(static_cast<Eigen::Index>(train_index[i]), static_cast<Eigen::Index>(train_index[j]));
      }
    }
    if (train_index.empty()) train = k;
    try {
      const PdIzation p = pd_ization_order(train);
      if (p.order > 0) {
        out.stages.nested = p.order;
        k = apply_stages(base.values(), self, self, out.stages);
      }
    } catch (const std::exception& e) {
      throw InputError(std::string("transform stage: ") + e.what());
    }
  }
  out.kernel = GramMatrix(std::move(k), base.ids(), GramKind::kernel, base.provenance());
  return out;
}

}  // namespace emdk
