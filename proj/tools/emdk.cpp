// emdk command-line tool.
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "emdk/emdk.hpp"

using namespace emdk;
using nlohmann::json;

namespace {

const char* kEmptyId = "__empty__";

struct PipelineFlags {
  std::string file;
  std::string variant, ground, transform, sink_point;
  std::optional<double> threshold, alpha, sink_flat, rbf_u, idk_u;
  bool no_rbf = false;

  void add(CLI::App* app, bool kernel_stages) {
    app->add_option("--pipeline", file, "pipeline JSON file");
    app->add_option("--variant", variant, "emd|emd-rubner|emdhat-alpha|emdhat-sink|emjd|emi|idk");
    app->add_option("--ground", ground, "euclidean|sqeuclidean|discrete|circle|file:PATH");
    app->add_option("--threshold", threshold, "ground distance threshold");
    app->add_option("--alpha", alpha, "mass penalty for emdhat-alpha");
    auto* flat = app->add_option("--sink-flat", sink_flat, "flat cost per unit of excess mass");
    app->add_option("--sink-point", sink_point, "sink location \"x,y,...\"")->excludes(flat);
    app->add_option("--idk-u", idk_u, "scale of the idk kernel");
    if (kernel_stages) {
      app->add_option("--transform", transform, "none|tanimoto|nested:N|pdize");
      app->add_option("--rbf-u", rbf_u, "fixed rbf scale (default: 1 / mean distance)");
      app->add_flag("--no-rbf", no_rbf, "skip the rbf stage");
    }
  }

  PipelineSpec resolve() const {
    PipelineSpec s = file.empty() ? PipelineSpec{} : pipeline_from_json(read_json_file(file));
    if (!variant.empty()) s.variant = parse_variant(variant);
    if (!ground.empty()) s.ground = ground;
    if (!transform.empty()) s.transform = transform;
    if (threshold) s.threshold = threshold;
    if (alpha) s.alpha = *alpha;
    if (idk_u) s.idk_u = *idk_u;
    if (rbf_u) s.rbf_u = rbf_u;
    if (no_rbf) s.rbf = false;
    if (sink_flat) {
      s.sink_flat = sink_flat;
      s.sink_point.reset();
    }
    if (!sink_point.empty()) {
      Point p;
      for (const auto& cell : split_csv_line(sink_point)) p.push_back(std::stod(cell));
      s.sink_point = p;
      s.sink_flat.reset();
    }
    return s;
  }
};

void emit_text(const std::string& text, const std::string& out) {
  if (out.empty() || out == "-") {
    std::cout << text;
  } else {
    std::ofstream f(out);
    if (!f) throw InputError("cannot open '" + out + "' for writing");
    f << text;
  }
}

void emit_matrix(const Eigen::MatrixXd& m, const std::vector<std::string>& ids, const std::string& out) {
  std::ostringstream s;
  write_matrix_csv(s, m, ids, ids);
  emit_text(s.str(), out);
}

void emit_json(const json& j, const std::string& out) { emit_text(j.dump(2) + "\n", out); }

LabeledMatrix read_square(const std::string& path) {
  LabeledMatrix m = read_matrix_csv(path);
  if (m.row_ids != m.col_ids) throw InputError(path + ": row and column ids differ");
  return m;
}

json diag_json(const DefinitenessReport& r) {
  json conc = json::array();
  for (const auto& [k, share] : r.concentration) conc.push_back({{"k", k}, {"share", share}});
  return {{"eigenvalues", r.eigenvalues},
          {"min_eig", r.min_eig},
          {"max_abs_eig", r.max_abs_eig},
          {"is_psd", r.is_psd},
          {"centered_max_eig", r.centered_max_eig},
          {"is_cnd", r.is_cnd},
          {"tolerance", r.tolerance},
          {"concentration", conc}};
}

json model_to_json(const OneVsAllModel& model, const PipelineSpec& pipeline, const KernelStages& stages,
                   Correction correction, double C, const Dataset& train) {
  json head{{"pipeline", pipeline_to_json(pipeline)}, {"correction", to_string(correction)}, {"C", C}};
  json machines = json::array();
  for (const auto& m : model.machines) {
    machines.push_back({{"class", m.class_name},
                        {"alphas", std::vector<double>(m.alphas.data(), m.alphas.data() + m.alphas.size())},
                        {"bias", m.bias},
                        {"shift", m.shift},
                        {"converged", m.converged},
                        {"iterations", m.iterations}});
  }
  json j = head;
  j["spec_hash"] = hash_json(head);
  j["stages"] = {{"u", stages.u ? json(*stages.u) : json(nullptr)}, {"nested", stages.nested}};
  j["classes"] = model.classes;
  j["machines"] = machines;
  j["train_ids"] = train.ids();
  j["train"] = dataset_to_json(train);
  return j;
}

int cmd_dist(const std::string& data, const PipelineFlags& pf, unsigned threads, const std::string& out) {
  PipelineSpec spec = pf.resolve();
  if (output_kind(spec.variant) != GramKind::distance) throw InputError("dist needs a distance variant");
  const Dataset ds = load_dataset(data);
  const GramMatrix g = assemble_gram(ds.items, make_pairwise(spec), GramKind::distance,
                                     hash_json(pipeline_to_json(spec)), threads);
  emit_matrix(g.values(), g.ids(), out);
  return 0;
}

int cmd_xform(const std::string& in, const std::string& op, const std::string& anchor, const std::string& out) {
  const LabeledMatrix m = read_square(in);
  Eigen::MatrixXd r;
  if (op == "tanimoto") {
    r = tanimoto(m.values);
  } else if (op.rfind("nested:", 0) == 0) {
    r = tanimoto_nested(m.values, std::stoi(op.substr(7)));
  } else if (op == "biotope") {
    if (anchor.empty()) throw InputError("biotope needs --anchor-row");
    const std::string id = anchor == "empty" ? kEmptyId : anchor;
    const auto it = std::find(m.row_ids.begin(), m.row_ids.end(), id);
    if (it == m.row_ids.end()) {
      throw InputError("anchor row '" + id + "' not found" +
                       (anchor == "empty" ? std::string(" (build the matrix with gram --base --include-empty)") : ""));
    }
    r = biotope(m.values, anchor_at_row(m.values, it - m.row_ids.begin()));
  } else {
    throw InputError("unknown --op '" + op + "'");
  }
  emit_matrix(r, m.row_ids, out);
  return 0;
}

int cmd_gram(const std::string& data, const PipelineFlags& pf, bool base_only, bool include_empty, unsigned threads,
             const std::string& out) {
  const PipelineSpec spec = pf.resolve();
  Dataset ds = load_dataset(data);
  if (include_empty) {
    WeightedPointSet none;
    none.set_id(kEmptyId);
    ds.items.push_back(none);
  }
  const GramMatrix base = assemble_gram(ds.items, make_pairwise(spec), output_kind(spec.variant),
                                        hash_json(pipeline_to_json(spec)), threads);
  if (base_only) {
    emit_matrix(base.values(), base.ids(), out);
    return 0;
  }
  std::vector<std::size_t> all(ds.items.size());
  std::iota(all.begin(), all.end(), 0);
  const KernelBuild kb = build_kernel(base, spec, all);
  emit_matrix(kb.kernel.values(), kb.kernel.ids(), out);
  if (kb.stages.u) std::cerr << "rbf u = " << *kb.stages.u << '\n';
  if (kb.stages.nested >= 0) std::cerr << "nested transform order = " << kb.stages.nested << '\n';
  return 0;
}

int cmd_diag(const std::string& in, double tol, const std::string& out) {
  const LabeledMatrix m = read_square(in);
  json j = diag_json(diagnose(m.values, tol));
  j["ids"] = m.row_ids;
  emit_json(j, out);
  return 0;
}

std::vector<int> binary_labels(const std::vector<std::string>& ids, const std::string& label_file,
                               const std::string& positive) {
  std::map<std::string, std::string> by_id;
  for (const auto& [id, label] : read_label_csv(label_file)) by_id[id] = label;
  std::vector<int> y;
  for (const auto& id : ids) {
    const auto it = by_id.find(id);
    if (it == by_id.end()) throw InputError("no label for id '" + id + "'");
    if (!positive.empty()) {
      y.push_back(it->second == positive ? 1 : -1);
    } else if (it->second == "1" || it->second == "+1") {
      y.push_back(1);
    } else if (it->second == "-1") {
      y.push_back(-1);
    } else {
      throw InputError("label '" + it->second + "' is not +1/-1; pass --positive CLASS");
    }
  }
  return y;
}

int cmd_correct(const std::string& in, const std::string& mode, const std::string& labels, const std::string& positive,
                const std::string& out) {
  const LabeledMatrix m = read_square(in);
  const GramMatrix g(m.values, m.row_ids, GramKind::kernel, in);
  if (mode == "shift") {
    const ShiftResult s = shift_correct(g);
    std::cerr << "shift = " << s.shift << '\n';
    emit_matrix(s.gram.values(), s.gram.ids(), out);
  } else if (mode == "ksvm") {
    if (labels.empty()) throw InputError("ksvm correction needs --labels");
    const std::vector<int> y = binary_labels(m.row_ids, labels, positive);
    const KsvmCorrection k = ksvm_correct(g.values(), y);
    std::cerr << "flipped = " << (k.flipped ? "yes" : "no") << '\n';
    emit_matrix(k.kernel_space(y), m.row_ids, out);
  } else {
    throw InputError("unknown --mode '" + mode + "'");
  }
  return 0;
}

int cmd_train(const std::string& data, const PipelineFlags& pf, const std::string& correction, double C,
              unsigned threads, const std::string& out) {
  const PipelineSpec spec = pf.resolve();
  const Dataset ds = load_dataset(data);
  const GramMatrix base = assemble_gram(ds.items, make_pairwise(spec), output_kind(spec.variant),
                                        hash_json(pipeline_to_json(spec)), threads);
  std::vector<std::size_t> all(ds.items.size());
  std::iota(all.begin(), all.end(), 0);
  const KernelBuild kb = build_kernel(base, spec, all);
  TrainOptions opts;
  opts.C = C;
  opts.correction = parse_correction(correction);
  const OneVsAllModel model = train_one_vs_all(kb.kernel, ds.labels(), opts);
  for (const auto& m : model.machines) {
    if (!m.converged) std::cerr << "warning: machine '" << m.class_name << "' hit the iteration cap\n";
  }
  emit_json(model_to_json(model, spec, kb.stages, opts.correction, C, ds), out);
  return 0;
}

int cmd_eval(const std::string& model_path, const std::string& data, unsigned threads, const std::string& out) {
  const json mj = read_json_file(model_path);
  const PipelineSpec spec = pipeline_from_json(mj.at("pipeline"));
  const Dataset train = dataset_from_json(mj.at("train"));
  const Dataset test = load_dataset(data);
  OneVsAllModel model;
  for (const auto& m : mj.at("machines")) {
    SvmModel s;
    const auto a = m.at("alphas").get<std::vector<double>>();
    s.alphas = Eigen::Map<const Eigen::VectorXd>(a.data(), static_cast<Eigen::Index>(a.size()));
    s.bias = m.at("bias").get<double>();
    s.class_name = m.at("class").get<std::string>();
    model.classes.push_back(s.class_name);
    model.machines.push_back(std::move(s));
  }
  KernelStages stages;
  if (!mj["stages"]["u"].is_null()) stages.u = mj["stages"]["u"].get<double>();
  stages.nested = mj["stages"]["nested"].get<int>();

  const SetPairFunction fn = make_pairwise(spec);
  const Eigen::MatrixXd cross = assemble_cross(test.items, train.items, fn, threads);
  Eigen::VectorXd row_self(static_cast<Eigen::Index>(test.items.size()));
  Eigen::VectorXd col_self(static_cast<Eigen::Index>(train.items.size()));
  for (std::size_t i = 0; i < test.items.size(); ++i) row_self(static_cast<Eigen::Index>(i)) = fn(test.items[i], test.items[i]);
  for (std::size_t i = 0; i < train.items.size(); ++i) col_self(static_cast<Eigen::Index>(i)) = fn(train.items[i], train.items[i]);
  const Eigen::MatrixXd k = apply_stages(cross, row_self, col_self, stages);

  const auto labels = test.labels();
  std::set<std::string> cls(model.classes.begin(), model.classes.end());
  cls.insert(labels.begin(), labels.end());
  const std::vector<std::string> classes(cls.begin(), cls.end());
  std::map<std::string, std::size_t> index;
  for (std::size_t c = 0; c < classes.size(); ++c) index[classes[c]] = c;
  std::vector<std::vector<int>> confusion(classes.size(), std::vector<int>(classes.size(), 0));
  std::size_t correct = 0;
  json predictions = json::array();
  for (Eigen::Index i = 0; i < k.rows(); ++i) {
    const Eigen::VectorXd row = k.row(i).transpose();
    const std::string pred = model.predict(std::span<const double>(row.data(), static_cast<std::size_t>(row.size())));
    const std::string& truth = labels[static_cast<std::size_t>(i)];
    correct += pred == truth;
    ++confusion[index[truth]][index[pred]];
    predictions.push_back({{"id", test.items[static_cast<std::size_t>(i)].id()}, {"label", truth}, {"predicted", pred}});
  }
  const double acc = labels.empty() ? 0.0 : 100.0 * static_cast<double>(correct) / static_cast<double>(labels.size());
  emit_json({{"spec_hash", mj.value("spec_hash", std::string())},
             {"accuracy", acc},
             {"classes", classes},
             {"confusion", confusion},
             {"predictions", predictions}},
            out);
  return 0;
}

int cmd_run(const std::string& spec_path, unsigned threads, const std::string& out) {
  ExperimentSpec spec = experiment_from_json(read_json_file(spec_path));
  const std::filesystem::path p(spec.dataset_path);
  if (p.is_relative()) spec.dataset_path = (std::filesystem::path(spec_path).parent_path() / p).string();
  if (threads) spec.threads = threads;
  const Report r = run_experiment(spec);
  emit_json(report_to_json(r), out);
  std::cerr << "mean accuracy " << r.mean_accuracy << " +- " << r.std_accuracy << " over " << r.folds.size()
            << " folds\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Earth mover's distance kernels: distances, Gram matrices, diagnostics and SVMs"};
  app.require_subcommand(1);
  std::string out;
  unsigned threads = 0;

  auto* dist = app.add_subcommand("dist", "pairwise distance matrix as CSV");
  std::string data;
  PipelineFlags dist_pf;
  dist->add_option("--data", data, "dataset JSON")->required();
  dist_pf.add(dist, false);
  dist->add_option("--threads", threads);
  dist->add_option("--out,-o", out);

  auto* xform = app.add_subcommand("xform", "transform a Gram or distance CSV");
  std::string in, op, anchor;
  xform->add_option("--in", in)->required();
  xform->add_option("--op", op, "tanimoto|nested:N|biotope")->required();
  xform->add_option("--anchor-row", anchor, "row id or 'empty'");
  xform->add_option("--out,-o", out);

  auto* gram = app.add_subcommand("gram", "kernel matrix from a dataset and pipeline");
  PipelineFlags gram_pf;
  bool base_only = false, include_empty = false;
  gram->add_option("--data", data, "dataset JSON")->required();
  gram_pf.add(gram, true);
  gram->add_flag("--base", base_only, "write the variant values before the rbf/transform stages");
  gram->add_flag("--include-empty", include_empty, "append the empty set as row '__empty__'");
  gram->add_option("--threads", threads);
  gram->add_option("--out,-o", out);

  auto* diag = app.add_subcommand("diag", "definiteness report as JSON");
  double tol = 1e-8;
  diag->add_option("--in", in)->required();
  diag->add_option("--tol", tol);
  diag->add_option("--out,-o", out);

  auto* correct = app.add_subcommand("correct", "shift or ksvm correction of a kernel CSV");
  std::string mode, labels, positive;
  correct->add_option("--in", in)->required();
  correct->add_option("--mode", mode, "shift|ksvm")->required();
  correct->add_option("--labels", labels, "id,label CSV");
  correct->add_option("--positive", positive, "class mapped to +1");
  correct->add_option("--out,-o", out);

  auto* train = app.add_subcommand("train", "one-vs-all SVM on a dataset");
  PipelineFlags train_pf;
  std::string correction = "none";
  double C = 1.0;
  train->add_option("--data", data)->required();
  train_pf.add(train, true);
  train->add_option("--correction", correction, "none|shift|ksvm");
  train->add_option("--C", C);
  train->add_option("--threads", threads);
  train->add_option("--out,-o", out);

  auto* eval = app.add_subcommand("eval", "accuracy of a model on a dataset");
  std::string model;
  eval->add_option("--model", model)->required();
  eval->add_option("--data", data)->required();
  eval->add_option("--threads", threads);
  eval->add_option("--out,-o", out);

  auto* run = app.add_subcommand("run", "experiment from a spec file");
  std::string spec;
  run->add_option("--spec", spec)->required();
  run->add_option("--threads", threads);
  run->add_option("--out,-o", out);

  auto* synth = app.add_subcommand("synth", "synthetic point-set dataset");
  SynthParams sp;
  std::string kind = "gaussian";
  bool flat = false;
  synth->add_option("--classes", sp.classes);
  synth->add_option("--per-class", sp.per_class);
  synth->add_option("--dim", sp.dim);
  synth->add_option("--seed", sp.seed);
  synth->add_option("--card-min", sp.card_min);
  synth->add_option("--card-max", sp.card_max);
  synth->add_option("--separation", sp.separation);
  synth->add_option("--keep", sp.keep);
  synth->add_flag("--flat", flat, "no nested class templates");
  synth->add_option("--kind", kind, "gaussian|corners");
  synth->add_option("--out,-o", out);

  auto* ingest = app.add_subcommand("ingest-posture", "posture CSV to dataset JSON");
  int per_cell = 0;
  std::uint64_t seed = 1;
  ingest->add_option("--in", in)->required();
  ingest->add_option("--per-class-per-group", per_cell, "balanced sample size");
  ingest->add_option("--seed", seed);
  ingest->add_option("--out,-o", out);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*dist) return cmd_dist(data, dist_pf, threads, out);
    if (*xform) return cmd_xform(in, op, anchor, out);
    if (*gram) return cmd_gram(data, gram_pf, base_only, include_empty, threads, out);
    if (*diag) return cmd_diag(in, tol, out);
    if (*correct) return cmd_correct(in, mode, labels, positive, out);
    if (*train) return cmd_train(data, train_pf, correction, C, threads, out);
    if (*eval) return cmd_eval(model, data, threads, out);
    if (*run) return cmd_run(spec, threads, out);
    if (*synth) {
      sp.nested = !flat;
      Dataset ds;
      if (kind == "gaussian") {
        ds = generate_synthetic(sp);
      } else if (kind == "corners") {
        ds = generate_corner_sets(sp.classes, sp.per_class, sp.seed);
      } else {
        throw InputError("unknown --kind '" + kind + "'");
      }
      emit_json(dataset_to_json(ds), out);
      return 0;
    }
    if (*ingest) {
      PostureIngest r = ingest_posture(in);
      std::cerr << r.rows << " rows, " << r.pruned_markers << " markers pruned, " << r.discarded_instances
                << " instances discarded\ncardinalities:";
      for (std::size_t k = 0; k < r.cardinality_histogram.size(); ++k) {
        if (r.cardinality_histogram[k]) std::cerr << ' ' << k << ':' << r.cardinality_histogram[k];
      }
      std::cerr << '\n';
      Dataset ds = std::move(r.data);
      if (per_cell > 0) {
        BalancedSample s = sample_balanced(ds, per_cell, seed);
        for (const auto& [c, g, n] : s.shortfalls) {
          std::cerr << "skipped class " << c << " group " << g << ": only " << n << " instances\n";
        }
        ds = std::move(s.data);
      }
      emit_json(dataset_to_json(ds), out);
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
