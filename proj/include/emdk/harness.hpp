#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"
#include "emdk/io.hpp"
#include "emdk/pipeline.hpp"
#include "emdk/svm.hpp"

namespace emdk {

struct SynthParams {
  int classes = 5;
  int per_class = 75;
  int card_min = 3;
  int card_max = 12;
  int dim = 2;
  double separation = 5.0;  // minimum anchor spacing, in units of sigma
  double sigma = 1.0;
  double keep = 0.9;        // chance that an instance keeps each template anchor
  bool nested = true;       // odd classes extend the previous class's template
  std::uint64_t seed = 1;
};

// Class c has a template of anchor points, spaced at least separation * sigma
// apart across all classes. An instance keeps each anchor with probability
// `keep` (redrawn until the size is in range) and perturbs it by N(0, sigma^2).
// With `nested`, class 2k+1 uses class 2k's anchors plus at least four more,
// so the two differ mostly in mass. Unit masses.
Dataset generate_synthetic(const SynthParams& p);

// 2-D sets in [0,1]^2, 5 to 15 points per set, with a class-dependent number
// of jittered corners on a class-specific polyline.
Dataset generate_corner_sets(int classes, int per_class, std::uint64_t seed);

struct Fold {
  std::string name;
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

// Seeded shuffle, then k contiguous folds whose sizes differ by at most one.
std::vector<Fold> kfold(std::size_t n, int k, std::uint64_t seed);
// One fold per distinct group (sorted), holding that group out.
std::vector<Fold> leave_one_group_out(const std::vector<std::string>& groups);
// Per repeat and per class: train_per_class then test_per_class drawn without
// replacement. Throws InputError when a class is too small.
std::vector<Fold> fixed_split(const std::vector<std::string>& labels, int train_per_class, int test_per_class,
                              int repeats, std::uint64_t seed);

struct ProtocolSpec {
  std::string kind = "kfold";  // kfold | leave_one_group_out | fixed_split
  int k = 5;
  int train_per_class = 0;
  int test_per_class = 0;
  int repeats = 1;
  std::uint64_t seed = 1;
};

struct ExperimentSpec {
  std::string dataset_path;
  std::string dataset_format = "json";  // json | posture-csv
  int sample_per_class_per_group = 0;   // 0: use everything
  std::uint64_t sample_seed = 1;
  PipelineSpec pipeline;
  Correction correction = Correction::none;
  double C = 1.0;
  ProtocolSpec protocol;
  unsigned threads = 0;
};

ExperimentSpec experiment_from_json(const nlohmann::json& j);
nlohmann::json experiment_to_json(const ExperimentSpec& spec);

struct FoldResult {
  std::string name;
  double accuracy = 0.0;  // percent
  std::vector<std::vector<int>> confusion;  // [true][predicted] over the class list
  nlohmann::json gram_diag;
};

struct Report {
  std::string spec_hash;
  std::vector<std::string> classes;
  std::vector<FoldResult> folds;
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;  // sample standard deviation
  nlohmann::json timings;
};

nlohmann::json report_to_json(const Report& r);

// Loads (and samples) the dataset named in the spec.
Dataset load_experiment_dataset(const ExperimentSpec& spec);
// Runs the protocol on `data`: one base Gram, then per fold the kernel
// stages on training rows only, a one-vs-all SVM and test predictions.
Report run_experiment(const ExperimentSpec& spec, const Dataset& data);
Report run_experiment(const ExperimentSpec& spec);

// Sort points lexicographically, concatenate, pad with trailing zeros to the
// longest instance. Masses are ignored.
std::vector<std::vector<double>> baseline_concat_vectors(const Dataset& ds);

struct PostureIngest {
  Dataset data;
  std::size_t rows = 0;
  std::size_t pruned_markers = 0;
  std::size_t discarded_instances = 0;
  std::vector<std::size_t> cardinality_histogram;  // index = marker count
};

// Rows "class,user,x,y,z,x,y,z,..."; empty or "?" cells mark absent markers.
// Markers farther than 200 from the origin are pruned and instances with
// fewer than 3 markers dropped. A non-numeric first row is taken as a header.
PostureIngest ingest_posture(const std::string& path);

struct BalancedSample {
  Dataset data;
  // (class, group, available) pairs that had fewer than requested and were skipped.
  std::vector<std::tuple<std::string, std::string, std::size_t>> shortfalls;
};

BalancedSample sample_balanced(const Dataset& ds, int per_class_per_group, std::uint64_t seed);

struct CndWitness {
  std::vector<WeightedPointSet> sets;
  Eigen::MatrixXd distances;
  double centered_max_eig = 0.0;    // largest eigenvalue of P D P
  double restricted_max_eig = 0.0;  // largest eigenvalue of D on the complement of 1 (may be negative)
  double scale = 0.0;               // largest |D_ij|
  int trial = 0;
};

using SetDraw = std::function<WeightedPointSet(std::mt19937_64&)>;
using SetPerturb = std::function<WeightedPointSet(const WeightedPointSet&, std::mt19937_64&)>;

// Evaluates up to `trials` Grams of `sets_per_trial` sets and returns the
// first whose centered form has an eigenvalue above rel_tol * scale. Without
// `perturb` every trial is a fresh draw; with it, trials hill-climb on the
// restricted top eigenvalue by perturbing one set at a time, restarting from
// fresh draws after `patience` steps without improvement.
std::optional<CndWitness> search_non_cnd(const SetDraw& draw, const SetPairFunction& distance, int trials,
                                         int sets_per_trial, std::uint64_t seed, double rel_tol = 1e-6,
                                         const SetPerturb& perturb = nullptr, int patience = 300);

// Recomputes the Gram of `sets` and its largest centered eigenvalue.
CndWitness evaluate_cnd_witness(const std::vector<WeightedPointSet>& sets, const SetPairFunction& distance);

nlohmann::json witness_to_json(const CndWitness& w);
CndWitness witness_from_json(const nlohmann::json& j);

}  // namespace emdk
