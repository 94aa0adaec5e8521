#include "emdk/harness.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <future>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <thread>

#include "emdk/errors.hpp"

namespace emdk {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::vector<Point> place_anchors(std::size_t count, int dim, double spacing, std::mt19937_64& rng) {
  double side = spacing * std::ceil(std::pow(static_cast<double>(count), 1.0 / dim)) * 1.5;
  std::vector<Point> anchors;
  while (anchors.size() < count) {
    anchors.clear();
    std::uniform_real_distribution<double> coord(0.0, side);
    std::size_t attempts = 0;
    while (anchors.size() < count && attempts < 200 * count) {
      ++attempts;
      Point p(static_cast<std::size_t>(dim));
      for (auto& x : p) x = coord(rng);
      bool ok = true;
      for (const auto& q : anchors) {
        double d2 = 0.0;
        for (int k = 0; k < dim; ++k) d2 += (p[k] - q[k]) * (p[k] - q[k]);
        if (d2 < spacing * spacing) {
          ok = false;
          break;
        }
      }
      if (ok) anchors.push_back(std::move(p));
    }
    side *= 1.25;
  }
  return anchors;
}

int uniform_int(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, std::max(lo, hi))(rng);
}

}  // namespace

Dataset generate_synthetic(const SynthParams& p) {
  if (!(p.separation > 0.0)) throw DomainError("separation must be positive");
  if (!(p.sigma > 0.0)) throw DomainError("sigma must be positive");
  if (p.classes < 1 || p.per_class < 1 || p.dim < 1) throw DomainError("classes, per_class and dim must be positive");
  if (p.card_min < 1 || p.card_max < p.card_min) throw DomainError("bad cardinality range");
  if (!(p.keep > 0.0 && p.keep <= 1.0)) throw DomainError("keep must lie in (0, 1]");

  std::mt19937_64 rng(p.seed);
  const int extra_min = 4;
  std::vector<int> template_sizes(static_cast<std::size_t>(p.classes));
  std::vector<int> new_anchors(static_cast<std::size_t>(p.classes));
  for (int c = 0; c < p.classes; ++c) {
    const bool extends = p.nested && c % 2 == 1;
    if (extends) {
      const int base = template_sizes[static_cast<std::size_t>(c - 1)];
      const int extra = uniform_int(rng, extra_min, p.card_max - base);
      template_sizes[static_cast<std::size_t>(c)] = base + extra;
      new_anchors[static_cast<std::size_t>(c)] = extra;
    } else {
      const int hi = p.nested && c + 1 < p.classes ? p.card_max - extra_min : p.card_max;
      const int sz = uniform_int(rng, p.card_min + 1, std::max(p.card_min + 1, hi));
      template_sizes[static_cast<std::size_t>(c)] = std::min(sz, p.card_max);
      new_anchors[static_cast<std::size_t>(c)] = template_sizes[static_cast<std::size_t>(c)];
    }
  }
  const std::size_t total = std::accumulate(new_anchors.begin(), new_anchors.end(), std::size_t{0},
                                            [](std::size_t a, int b) { return a + static_cast<std::size_t>(b); });
  const std::vector<Point> anchors = place_anchors(total, p.dim, p.separation * p.sigma, rng);

  std::vector<std::vector<std::size_t>> templates(static_cast<std::size_t>(p.classes));
  std::size_t next = 0;
  for (int c = 0; c < p.classes; ++c) {
    auto& t = templates[static_cast<std::size_t>(c)];
    if (p.nested && c % 2 == 1) t = templates[static_cast<std::size_t>(c - 1)];
    for (int k = 0; k < new_anchors[static_cast<std::size_t>(c)]; ++k) t.push_back(next++);
  }

  Dataset ds;
  ds.dimension = static_cast<std::size_t>(p.dim);
  std::normal_distribution<double> noise(0.0, p.sigma);
  std::bernoulli_distribution keep(p.keep);
  for (int c = 0; c < p.classes; ++c) {
    const auto& t = templates[static_cast<std::size_t>(c)];
    for (int m = 0; m < p.per_class; ++m) {
      std::vector<std::size_t> kept, dropped;
      for (std::size_t a : t) (keep(rng) ? kept : dropped).push_back(a);
      while (static_cast<int>(kept.size()) > p.card_max) {
        const std::size_t k = std::uniform_int_distribution<std::size_t>(0, kept.size() - 1)(rng);
        kept.erase(kept.begin() + static_cast<std::ptrdiff_t>(k));
      }
      while (static_cast<int>(kept.size()) < p.card_min && !dropped.empty()) {
        const std::size_t k = std::uniform_int_distribution<std::size_t>(0, dropped.size() - 1)(rng);
        kept.push_back(dropped[k]);
        dropped.erase(dropped.begin() + static_cast<std::ptrdiff_t>(k));
      }
      std::vector<Point> pts;
      for (std::size_t a : kept) {
        Point q = anchors[a];
        for (auto& x : q) x += noise(rng);
        pts.push_back(std::move(q));
      }
      WeightedPointSet s(ds.dimension, pts);
      s.set_id("c" + std::to_string(c) + "_" + std::to_string(m));
      s.set_class_label("c" + std::to_string(c));
      s.set_group_label("g" + std::to_string(m % 5));
      ds.items.push_back(std::move(s));
    }
  }
  return ds;
}

Dataset generate_corner_sets(int classes, int per_class, std::uint64_t seed) {
  if (classes < 1 || per_class < 1) throw DomainError("classes and per_class must be positive");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.1, 0.9);
  std::normal_distribution<double> jitter(0.0, 0.02);
  Dataset ds;
  ds.dimension = 2;
  for (int c = 0; c < classes; ++c) {
    std::vector<Point> path(15);
    for (auto& v : path) v = {unit(rng), unit(rng)};
    const double center = classes > 1 ? 5.0 + 10.0 * c / (classes - 1) : 10.0;
    for (int m = 0; m < per_class; ++m) {
      int count = static_cast<int>(std::lround(center + std::normal_distribution<double>(0.0, 1.5)(rng)));
      count = std::clamp(count, 5, 15);
      std::vector<Point> pts;
      for (int k = 0; k < count; ++k) {
        Point q = path[static_cast<std::size_t>(k)];
        for (auto& x : q) x = std::clamp(x + jitter(rng), 0.0, 1.0);
        pts.push_back(std::move(q));
      }
      WeightedPointSet s(2, pts);
      s.set_id("k" + std::to_string(c) + "_" + std::to_string(m));
      s.set_class_label(std::to_string(c));
      ds.items.push_back(std::move(s));
    }
  }
  return ds;
}

std::vector<Fold> kfold(std::size_t n, int k, std::uint64_t seed) {
  if (k < 2) throw DomainError("k-fold needs k >= 2");
  if (n < static_cast<std::size_t>(k)) throw DomainError("fewer items than folds");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<Fold> folds;
  const std::size_t base = n / static_cast<std::size_t>(k);
  const std::size_t extra = n % static_cast<std::size_t>(k);
  std::size_t start = 0;
  for (int f = 0; f < k; ++f) {
    const std::size_t len = base + (static_cast<std::size_t>(f) < extra ? 1 : 0);
    Fold fold;
    fold.name = "fold" + std::to_string(f);
    std::vector<bool> in_test(n, false);
    for (std::size_t i = start; i < start + len; ++i) in_test[order[i]] = true;
    for (std::size_t i = 0; i < n; ++i) (in_test[i] ? fold.test : fold.train).push_back(i);
    folds.push_back(std::move(fold));
    start += len;
  }
  return folds;
}

std::vector<Fold> leave_one_group_out(const std::vector<std::string>& groups) {
  const std::set<std::string> unique(groups.begin(), groups.end());
  if (unique.size() < 2) throw DomainError("leave-one-group-out needs at least two groups");
  std::vector<Fold> folds;
  for (const auto& g : unique) {
    Fold fold;
    fold.name = g;
    for (std::size_t i = 0; i < groups.size(); ++i) (groups[i] == g ? fold.test : fold.train).push_back(i);
    folds.push_back(std::move(fold));
  }
  return folds;
}

std::vector<Fold> fixed_split(const std::vector<std::string>& labels, int train_per_class, int test_per_class,
                              int repeats, std::uint64_t seed) {
  if (train_per_class < 1 || test_per_class < 0 || repeats < 1) throw DomainError("bad fixed split sizes");
  std::map<std::string, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
  const std::size_t need = static_cast<std::size_t>(train_per_class + test_per_class);
  for (const auto& [cls, idx] : by_class) {
    if (idx.size() < need) {
      throw InputError("class '" + cls + "' has " + std::to_string(idx.size()) + " items, split needs " +
                       std::to_string(need));
    }
  }
  std::mt19937_64 rng(seed);
  std::vector<Fold> folds;
  for (int r = 0; r < repeats; ++r) {
    Fold fold;
    fold.name = "repeat" + std::to_string(r);
    for (auto [cls, idx] : by_class) {
      std::shuffle(idx.begin(), idx.end(), rng);
      fold.train.insert(fold.train.end(), idx.begin(), idx.begin() + train_per_class);
      fold.test.insert(fold.test.end(), idx.begin() + train_per_class, idx.begin() + static_cast<std::ptrdiff_t>(need));
    }
    std::sort(fold.train.begin(), fold.train.end());
    std::sort(fold.test.begin(), fold.test.end());
    folds.push_back(std::move(fold));
  }
  return folds;
}

ExperimentSpec experiment_from_json(const nlohmann::json& j) {
  ExperimentSpec s;
  try {
    const auto& d = j.at("dataset");
    s.dataset_path = d.at("path").get<std::string>();
    s.dataset_format = d.value("format", std::string("json"));
    if (d.contains("sample") && !d["sample"].is_null()) {
      s.sample_per_class_per_group = d["sample"].at("per_class_per_group").get<int>();
      s.sample_seed = d["sample"].value("seed", std::uint64_t{1});
    }
    if (j.contains("pipeline")) s.pipeline = pipeline_from_json(j["pipeline"]);
    s.correction = parse_correction(j.value("correction", std::string("none")));
    s.C = j.value("C", 1.0);
    if (j.contains("protocol")) {
      const auto& p = j["protocol"];
      s.protocol.kind = p.value("kind", std::string("kfold"));
      s.protocol.k = p.value("k", 5);
      s.protocol.train_per_class = p.value("train_per_class", 0);
      s.protocol.test_per_class = p.value("test_per_class", 0);
      s.protocol.repeats = p.value("repeats", 1);
      s.protocol.seed = p.value("seed", std::uint64_t{1});
    }
    s.threads = j.value("threads", 0u);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("experiment spec: ") + e.what());
  }
  return s;
}

nlohmann::json experiment_to_json(const ExperimentSpec& s) {
  nlohmann::json d{{"path", s.dataset_path}, {"format", s.dataset_format}};
  if (s.sample_per_class_per_group > 0) {
    d["sample"] = {{"per_class_per_group", s.sample_per_class_per_group}, {"seed", s.sample_seed}};
  }
  return {{"dataset", d},
          {"pipeline", pipeline_to_json(s.pipeline)},
          {"correction", to_string(s.correction)},
          {"C", s.C},
          {"protocol",
           {{"kind", s.protocol.kind},
            {"k", s.protocol.k},
            {"train_per_class", s.protocol.train_per_class},
            {"test_per_class", s.protocol.test_per_class},
            {"repeats", s.protocol.repeats},
            {"seed", s.protocol.seed}}},
          {"threads", s.threads}};
}

nlohmann::json report_to_json(const Report& r) {
  nlohmann::json folds = nlohmann::json::array();
  for (const auto& f : r.folds) {
    folds.push_back({{"name", f.name}, {"accuracy", f.accuracy}, {"confusion", f.confusion}, {"gram_diag", f.gram_diag}});
  }
  return {{"spec_hash", r.spec_hash},     {"classes", r.classes},         {"folds", folds},
          {"mean_accuracy", r.mean_accuracy}, {"std_accuracy", r.std_accuracy}, {"timings", r.timings}};
}

Dataset load_experiment_dataset(const ExperimentSpec& spec) {
  Dataset ds;
  if (spec.dataset_format == "json") {
    ds = load_dataset(spec.dataset_path);
  } else if (spec.dataset_format == "posture-csv") {
    ds = ingest_posture(spec.dataset_path).data;
  } else {
    throw InputError("unknown dataset format '" + spec.dataset_format + "'");
  }
  if (spec.sample_per_class_per_group > 0) {
    ds = sample_balanced(ds, spec.sample_per_class_per_group, spec.sample_seed).data;
  }
  return ds;
}

Report run_experiment(const ExperimentSpec& spec, const Dataset& data) {
  const auto t0 = Clock::now();
  Report report;
  nlohmann::json hashed = experiment_to_json(spec);
  hashed.erase("threads");
  report.spec_hash = hash_json(hashed);

  const std::vector<std::string> labels = data.labels();
  const std::set<std::string> class_set(labels.begin(), labels.end());
  report.classes.assign(class_set.begin(), class_set.end());
  std::map<std::string, int> class_index;
  for (std::size_t c = 0; c < report.classes.size(); ++c) class_index[report.classes[c]] = static_cast<int>(c);

  std::vector<Fold> folds;
  const auto& p = spec.protocol;
  if (p.kind == "kfold") {
    folds = kfold(data.items.size(), p.k, p.seed);
  } else if (p.kind == "leave_one_group_out") {
    folds = leave_one_group_out(data.groups());
  } else if (p.kind == "fixed_split") {
    folds = fixed_split(labels, p.train_per_class, p.test_per_class, p.repeats, p.seed);
  } else {
    throw InputError("unknown protocol '" + p.kind + "'");
  }

  SetPairFunction fn;
  try {
    fn = make_pairwise(spec.pipeline);
  } catch (const std::exception& e) {
    throw InputError(std::string("pipeline construction: ") + e.what());
  }
  const auto tg = Clock::now();
  GramMatrix base;
  try {
    base = assemble_gram(data.items, fn, output_kind(spec.pipeline.variant), report.spec_hash, spec.threads);
  } catch (const EvaluationError& e) {
    throw InputError(std::string("variant stage: ") + e.what());
  }
  const double gram_seconds = seconds_since(tg);

  const auto tf = Clock::now();
  auto run_fold = [&](const Fold& fold) {
    FoldResult r;
    r.name = fold.name;
    const KernelBuild kb = build_kernel(base, spec.pipeline, fold.train);
    const GramMatrix train = kb.kernel.submatrix(fold.train);
    std::vector<std::string> train_labels;
    for (std::size_t i : fold.train) train_labels.push_back(labels[i]);

    const DefinitenessReport diag = diagnose(train);
    int negatives = 0;
    for (double ev : diag.eigenvalues) {
      if (ev < -diag.tolerance * diag.max_abs_eig) ++negatives;
    }
    r.gram_diag = {{"min_eig", diag.min_eig},   {"max_abs_eig", diag.max_abs_eig},
                   {"is_psd", diag.is_psd},      {"negative_eigenvalues", negatives},
                   {"tolerance", diag.tolerance}};
    if (kb.stages.u) r.gram_diag["u"] = *kb.stages.u;
    if (kb.stages.nested >= 0) r.gram_diag["nested"] = kb.stages.nested;

    TrainOptions opts;
    opts.C = spec.C;
    opts.correction = spec.correction;
    const OneVsAllModel model = train_one_vs_all(train, train_labels, opts);
    bool converged = true;
    for (const auto& m : model.machines) converged = converged && m.converged;
    r.gram_diag["converged"] = converged;
    if (spec.correction == Correction::shift) r.gram_diag["shift"] = model.machines.front().shift;

    const std::size_t nc = report.classes.size();
    r.confusion.assign(nc, std::vector<int>(nc, 0));
    std::size_t correct = 0;
    std::vector<double> row(fold.train.size());
    for (std::size_t t : fold.test) {
      for (std::size_t j = 0; j < fold.train.size(); ++j) {
        row[j] = kb.kernel.values()(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(fold.train[j]));
      }
      const std::string pred = model.predict(row);
      if (pred == labels[t]) ++correct;
      ++r.confusion[static_cast<std::size_t>(class_index[labels[t]])][static_cast<std::size_t>(class_index[pred])];
    }
    r.accuracy = fold.test.empty() ? 0.0 : 100.0 * static_cast<double>(correct) / static_cast<double>(fold.test.size());
    return r;
  };

  const unsigned hw = spec.threads ? spec.threads : std::max(1u, std::thread::hardware_concurrency());
  report.folds.resize(folds.size());
  for (std::size_t start = 0; start < folds.size(); start += hw) {
    std::vector<std::future<FoldResult>> pending;
    const std::size_t stop = std::min(folds.size(), start + hw);
    for (std::size_t f = start; f < stop; ++f) pending.push_back(std::async(std::launch::async, run_fold, std::cref(folds[f])));
    for (std::size_t f = start; f < stop; ++f) report.folds[f] = pending[f - start].get();
  }

  double sum = 0.0;
  for (const auto& f : report.folds) sum += f.accuracy;
  const double n = static_cast<double>(report.folds.size());
  report.mean_accuracy = sum / n;
  double ss = 0.0;
  for (const auto& f : report.folds) ss += (f.accuracy - report.mean_accuracy) * (f.accuracy - report.mean_accuracy);
  report.std_accuracy = report.folds.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  report.timings = {{"gram_seconds", gram_seconds},
                    {"folds_seconds", seconds_since(tf)},
                    {"total_seconds", seconds_since(t0)}};
  return report;
}

Report run_experiment(const ExperimentSpec& spec) { return run_experiment(spec, load_experiment_dataset(spec)); }

std::vector<std::vector<double>> baseline_concat_vectors(const Dataset& ds) {
  std::size_t longest = 0;
  std::vector<std::vector<double>> out;
  for (const auto& s : ds.items) {
    // Supports are stored in lexicographic order already.
    out.push_back(s.coordinates());
    longest = std::max(longest, s.coordinates().size());
  }
  for (auto& v : out) v.resize(longest, 0.0);
  return out;
}

PostureIngest ingest_posture(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "' for reading");
  PostureIngest res;
  res.data.dimension = 3;
  std::string line;
  std::size_t lineno = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    const auto cells = split_csv_line(line);
    const std::string where = path + ": line " + std::to_string(lineno);
    auto absent = [](const std::string& c) { return c.empty() || c == "?"; };
    auto number = [&](const std::string& c) {
      try {
        std::size_t used = 0;
        const double v = std::stod(c, &used);
        if (used == c.size() && std::isfinite(v)) return v;
      } catch (const std::exception&) {
      }
      throw InputError(where + ": not a number: '" + c + "'");
    };
    if (first) {
      first = false;
      bool numeric = cells.size() > 2;
      for (std::size_t c = 2; c < cells.size() && numeric; ++c) {
        if (absent(cells[c])) continue;
        try {
          number(cells[c]);
        } catch (const InputError&) {
          numeric = false;
        }
      }
      if (!numeric) continue;
    }
    if (cells.size() < 2) throw InputError(where + ": expected class,user,coordinates");
    if ((cells.size() - 2) % 3 != 0) throw InputError(where + ": coordinate cells are not in x,y,z triples");
    ++res.rows;
    std::vector<Point> markers;
    for (std::size_t c = 2; c + 2 < cells.size(); c += 3) {
      const int missing = absent(cells[c]) + absent(cells[c + 1]) + absent(cells[c + 2]);
      if (missing == 3) continue;
      if (missing != 0) throw InputError(where + ": marker at column " + std::to_string(c + 1) + " is partially empty");
      Point q{number(cells[c]), number(cells[c + 1]), number(cells[c + 2])};
      if (std::sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2]) > 200.0) {
        ++res.pruned_markers;
        continue;
      }
      markers.push_back(std::move(q));
    }
    if (markers.size() < 3) {
      ++res.discarded_instances;
      continue;
    }
    if (res.cardinality_histogram.size() <= markers.size()) res.cardinality_histogram.resize(markers.size() + 1, 0);
    ++res.cardinality_histogram[markers.size()];
    WeightedPointSet s(3, markers);
    s.set_id("r" + std::to_string(lineno));
    s.set_class_label(cells[0]);
    s.set_group_label(cells[1]);
    res.data.items.push_back(std::move(s));
  }
  return res;
}

BalancedSample sample_balanced(const Dataset& ds, int per_class_per_group, std::uint64_t seed) {
  if (per_class_per_group < 1) throw DomainError("per_class_per_group must be positive");
  std::map<std::pair<std::string, std::string>, std::vector<std::size_t>> cells;
  const auto labels = ds.labels();
  const auto groups = ds.groups();
  for (std::size_t i = 0; i < ds.items.size(); ++i) cells[{labels[i], groups[i]}].push_back(i);
  BalancedSample out;
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> chosen;
  const auto want = static_cast<std::size_t>(per_class_per_group);
  for (auto& [key, idx] : cells) {
    if (idx.size() < want) {
      out.shortfalls.emplace_back(key.first, key.second, idx.size());
      continue;
    }
    std::shuffle(idx.begin(), idx.end(), rng);
    chosen.insert(chosen.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(want));
  }
  std::sort(chosen.begin(), chosen.end());
  out.data = ds.subset(chosen);
  return out;
}

CndWitness evaluate_cnd_witness(const std::vector<WeightedPointSet>& sets, const SetPairFunction& distance) {
  CndWitness w;
  w.sets = sets;
  const auto n = static_cast<Eigen::Index>(sets.size());
  w.distances.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    w.distances(i, i) = distance(sets[static_cast<std::size_t>(i)], sets[static_cast<std::size_t>(i)]);
    for (Eigen::Index j = i + 1; j < n; ++j) {
      w.distances(i, j) = w.distances(j, i) =
          distance(sets[static_cast<std::size_t>(i)], sets[static_cast<std::size_t>(j)]);
    }
  }
  const DefinitenessReport r = diagnose(w.distances);
  w.centered_max_eig = r.centered_max_eig;
  w.scale = w.distances.cwiseAbs().maxCoeff();
  if (n >= 2) {
    const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(Eigen::MatrixXd::Ones(n, 1)).householderQ();
    const Eigen::MatrixXd b = q.rightCols(n - 1);
    const Eigen::MatrixXd restricted = b.transpose() * w.distances * b;
    w.restricted_max_eig =
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(restricted, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
  }
  return w;
}

std::optional<CndWitness> search_non_cnd(const SetDraw& draw, const SetPairFunction& distance, int trials,
                                         int sets_per_trial, std::uint64_t seed, double rel_tol,
                                         const SetPerturb& perturb, int patience) {
  std::mt19937_64 rng(seed);
  auto fresh = [&] {
    std::vector<WeightedPointSet> sets;
    for (int k = 0; k < sets_per_trial; ++k) sets.push_back(draw(rng));
    return sets;
  };
  auto score = [](const CndWitness& w) { return w.restricted_max_eig / std::max(w.scale, 1e-300); };
  std::optional<CndWitness> current;
  int stale = 0;
  for (int t = 0; t < trials; ++t) {
    std::vector<WeightedPointSet> sets;
    if (perturb && current && stale < patience) {
      sets = current->sets;
      auto& s = sets[std::uniform_int_distribution<std::size_t>(0, sets.size() - 1)(rng)];
      s = perturb(s, rng);
    } else {
      sets = fresh();
      current.reset();
      stale = 0;
    }
    CndWitness w = evaluate_cnd_witness(sets, distance);
    if (w.centered_max_eig > rel_tol * w.scale) {
      w.trial = t;
      return w;
    }
    if (!current || score(w) > score(*current)) {
      current = std::move(w);
      stale = 0;
    } else {
      ++stale;
    }
  }
  return std::nullopt;
}

nlohmann::json witness_to_json(const CndWitness& w) {
  Dataset ds;
  ds.dimension = w.sets.empty() ? 0 : w.sets.front().dimension();
  ds.items = w.sets;
  nlohmann::json j;
  j["sets"] = dataset_to_json(ds);
  j["centered_max_eig"] = w.centered_max_eig;
  j["scale"] = w.scale;
  j["trial"] = w.trial;
  return j;
}

CndWitness witness_from_json(const nlohmann::json& j) {
  CndWitness w;
  w.sets = dataset_from_json(j.at("sets")).items;
  w.centered_max_eig = j.at("centered_max_eig").get<double>();
  w.scale = j.at("scale").get<double>();
  w.trial = j.value("trial", 0);
  return w;
}

}  // namespace emdk
