#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "emdk/emdk.hpp"

namespace py = pybind11;
using namespace emdk;

namespace {

PipelineSpec spec_from(const std::string& pipeline_json) {
  return pipeline_from_json(nlohmann::json::parse(pipeline_json));
}

GroundDistance ground_from(const std::string& kind, std::optional<double> threshold) {
  PipelineSpec s;
  s.ground = kind;
  s.threshold = threshold;
  return make_ground(s);
}

SinkSpec sink_from(const GroundDistance& g, std::optional<double> flat, std::optional<Point> point) {
  PipelineSpec s;
  s.sink_flat = flat;
  s.sink_point = point;
  return make_sink(s, g);
}

WeightedPointSet make_set(const Eigen::MatrixXd& points, std::optional<std::vector<double>> weights,
                          std::string id, std::optional<std::string> label, std::optional<std::string> group) {
  std::vector<Point> pts;
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    pts.emplace_back(static_cast<std::size_t>(points.cols()));
    for (Eigen::Index k = 0; k < points.cols(); ++k) pts.back()[static_cast<std::size_t>(k)] = points(i, k);
  }
  std::vector<double> m = weights ? *weights : std::vector<double>(pts.size(), 1.0);
  WeightedPointSet s(static_cast<std::size_t>(points.cols()), pts, m);
  s.set_id(std::move(id)).set_class_label(std::move(label)).set_group_label(std::move(group));
  return s;
}

py::dict report_dict(const DefinitenessReport& r) {
  py::dict d;
  d["eigenvalues"] = r.eigenvalues;
  d["min_eig"] = r.min_eig;
  d["max_abs_eig"] = r.max_abs_eig;
  d["is_psd"] = r.is_psd;
  d["centered_max_eig"] = r.centered_max_eig;
  d["is_cnd"] = r.is_cnd;
  d["tolerance"] = r.tolerance;
  d["concentration"] = r.concentration;
  return d;
}

}  // namespace

PYBIND11_MODULE(_emdk, m) {
  m.doc() = "Earth mover's distance kernels";

  py::register_exception<InputError>(m, "InputError", PyExc_ValueError);
  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<DimensionMismatch>(m, "DimensionMismatch", PyExc_ValueError);

  py::class_<WeightedPointSet>(m, "PointSet")
      .def(py::init(&make_set), py::arg("points"), py::arg("weights") = py::none(), py::arg("id") = "",
           py::arg("label") = py::none(), py::arg("group") = py::none())
      .def_property_readonly("dimension", &WeightedPointSet::dimension)
      .def_property_readonly("total_mass", &WeightedPointSet::total_mass)
      .def_property_readonly("masses", &WeightedPointSet::masses)
      .def_property_readonly("id", &WeightedPointSet::id)
      .def_property_readonly("label", &WeightedPointSet::class_label)
      .def_property_readonly("group", &WeightedPointSet::group_label)
      .def_property_readonly("points",
                             [](const WeightedPointSet& s) {
                               Eigen::MatrixXd out(static_cast<Eigen::Index>(s.size()),
                                                   static_cast<Eigen::Index>(s.dimension()));
                               for (std::size_t i = 0; i < s.size(); ++i)
                                 for (std::size_t k = 0; k < s.dimension(); ++k)
                                   out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = s.point(i)[k];
                               return out;
                             })
      .def("__len__", &WeightedPointSet::size);

  m.def("intersect", &intersect);
  m.def("unite", &unite);
  m.def("normalize", &normalize);
  m.def("jaccard", &jaccard_index);

  m.def(
      "emd", [](const WeightedPointSet& a, const WeightedPointSet& b, const std::string& ground,
                std::optional<double> threshold) { return emd(a, b, ground_from(ground, threshold)).cost; },
      py::arg("a"), py::arg("b"), py::arg("ground") = "euclidean", py::arg("threshold") = py::none());
  m.def(
      "emdhat",
      [](const WeightedPointSet& a, const WeightedPointSet& b, const std::string& ground,
         std::optional<double> threshold, std::optional<double> sink_flat, std::optional<Point> sink_point) {
        const auto g = ground_from(ground, threshold);
        return emdhat_p(a, b, g, sink_from(g, sink_flat, sink_point));
      },
      py::arg("a"), py::arg("b"), py::arg("ground") = "euclidean", py::arg("threshold") = py::none(),
      py::arg("sink_flat") = py::none(), py::arg("sink_point") = py::none());
  m.def(
      "emi",
      [](const WeightedPointSet& a, const WeightedPointSet& b, const std::string& ground,
         std::optional<double> threshold, std::optional<double> sink_flat, std::optional<Point> sink_point) {
        const auto g = ground_from(ground, threshold);
        return emi(a, b, g, sink_from(g, sink_flat, sink_point));
      },
      py::arg("a"), py::arg("b"), py::arg("ground") = "euclidean", py::arg("threshold") = py::none(),
      py::arg("sink_flat") = py::none(), py::arg("sink_point") = py::none());
  m.def("emd_1d", [](const WeightedPointSet& a, const WeightedPointSet& b) { return emd_1d(a, b); });
  m.def("emd_circle", &emd_circle);

  m.def("tanimoto", [](const Eigen::MatrixXd& k, int n) { return tanimoto_nested(k, n); }, py::arg("gram"),
        py::arg("n") = 1);
  m.def(
      "biotope", [](const Eigen::MatrixXd& d, Eigen::Index row) { return biotope(d, anchor_at_row(d, row)); },
      py::arg("distances"), py::arg("anchor_row"));
  m.def(
      "pd_ization_order",
      [](const Eigen::MatrixXd& k) {
        const auto r = pd_ization_order(k);
        return py::make_tuple(r.order, r.result);
      },
      py::arg("gram"));
  m.def(
      "diagnose", [](const Eigen::MatrixXd& g, double tol) { return report_dict(diagnose(g, tol)); },
      py::arg("gram"), py::arg("tol") = 1e-8);
  m.def("rbf", &rbf, py::arg("distances"), py::arg("u"));

  m.def(
      "pairwise",
      [](const std::vector<WeightedPointSet>& sets, const std::string& pipeline_json, unsigned threads) {
        const PipelineSpec s = spec_from(pipeline_json);
        return assemble_gram(sets, make_pairwise(s), output_kind(s.variant), "", threads).values();
      },
      py::arg("sets"), py::arg("pipeline") = "{}", py::arg("threads") = 0);

  py::class_<OneVsAllModel>(m, "OneVsAll")
      .def_readonly("classes", &OneVsAllModel::classes)
      .def("predict", [](const OneVsAllModel& model, const Eigen::VectorXd& row) {
        std::vector<double> scores;
        const std::string label = model.predict(std::span<const double>(row.data(), static_cast<std::size_t>(row.size())), &scores);
        return py::make_tuple(label, scores);
      });
  m.def(
      "train_one_vs_all",
      [](const Eigen::MatrixXd& k, const std::vector<std::string>& labels, double C, const std::string& correction) {
        std::vector<std::string> ids;
        for (std::size_t i = 0; i < labels.size(); ++i) ids.push_back(std::to_string(i));
        TrainOptions o;
        o.C = C;
        o.correction = parse_correction(correction);
        return train_one_vs_all(GramMatrix(k, ids, GramKind::kernel), labels, o);
      },
      py::arg("kernel"), py::arg("labels"), py::arg("C") = 1.0, py::arg("correction") = "none");

  m.def(
      "synthetic",
      [](int classes, int per_class, std::uint64_t seed) {
        SynthParams p;
        p.classes = classes;
        p.per_class = per_class;
        p.seed = seed;
        return generate_synthetic(p).items;
      },
      py::arg("classes") = 5, py::arg("per_class") = 75, py::arg("seed") = 1);
}
