// spikelda command-line interface: simulate, fit, predict, tune, diagnose, info.
//
// Exit codes: 0 success, 2 validation/usage error, 3 runtime or numerical
// error, 4 diagnostic assertion failure.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "spikelda/spikelda.hpp"

namespace {

constexpr const char* kVersion = "0.1.0";

std::uint64_t resolve_seed(const CLI::Option* seed_opt, std::uint64_t seed_flag) {
  if (seed_opt->count() > 0) return seed_flag;
  if (const char* env = std::getenv("SPIKELDA_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw spikelda::ValidationError("SPIKELDA_SEED is not a valid integer");
    }
  }
  return spikelda::kDefaultSeed;
}

std::ostream& open_output(const std::string& path, std::ofstream& file) {
  if (path == "-") return std::cout;
  file.open(path);
  if (!file) throw spikelda::Error("cannot write '" + path + "'");
  return file;
}

struct SimulateOptions {
  std::string model = "eqcorr";
  double rho = 0.5;
  int p = 800;
  int n = 100;
  int n_test = 100;
  int reps = 200;
  std::string method = "pclda";
  std::string entry_dist = "normal";
  std::string selection = "cv";
  double d_frac = 0.9;
  int d_fixed = 0;
  int s = 10;
  int cv_s_max = 30;
  int cv_k = 5;
  double c = 0.5;
  double alpha = 0.3;
  std::string out = "-";
  std::string format = "csv";
  std::uint64_t seed = spikelda::kDefaultSeed;
  int threads = 0;
};

int cmd_simulate(const SimulateOptions& o, std::uint64_t seed) {
  using namespace spikelda;
  SimSpec spec;
  if (o.model == "eqcorr") {
    spec.model = SimSpec::ModelKind::EqualCorr;
  } else if (o.model == "blockdiag") {
    spec.model = SimSpec::ModelKind::BlockDiag;
  } else {
    spec.model = SimSpec::ModelKind::RandomCorr;
  }
  spec.rho = o.rho;
  spec.p = o.p;
  spec.n_train_per_class = o.n;
  spec.n_test_per_class = o.n_test;
  if (o.entry_dist == "normal") {
    spec.entry_dist = EntryDist::Normal;
  } else if (o.entry_dist == "uniform") {
    spec.entry_dist = EntryDist::UniformPm1;
  } else {
    spec.entry_dist = EntryDist::StudentT5;
  }

  MethodConfig method;
  if (o.method == "oracle") {
    method = MethodConfig::oracle();
  } else if (o.method == "nsc") {
    method = MethodConfig::nsc();
  } else {
    method = MethodConfig::pclda_standard();
    method.d_policy = o.d_fixed > 0 ? DPolicy::fixed(o.d_fixed)
                                    : DPolicy::variance_fraction(o.d_frac);
    if (o.selection == "topk") {
      method.select_policy = MethodConfig::SelectPolicy::FixedTopS;
      method.s = o.s;
    } else if (o.selection == "threshold") {
      method.select_policy = MethodConfig::SelectPolicy::Threshold;
      method.threshold_c = o.c;
      method.threshold_alpha = o.alpha;
    } else {
      method.select_policy = MethodConfig::SelectPolicy::CvTopS;
      method.cv_s_max = o.cv_s_max;
    }
    method.cv_folds = o.cv_k;
  }

  McResult result = run_mc(spec, method, o.reps, seed, o.threads);
  std::ofstream file;
  std::ostream& out = open_output(o.out, file);
  if (o.format == "json") {
    out << summary_to_json(spec, method, o.reps, seed, result).dump(1) << '\n';
  } else {
    write_replicates_csv(result, out);
  }
  std::cerr << "simulate: method=" << method.name() << " reps=" << o.reps
            << " mean_error=" << result.error_rate.mean
            << " sd=" << result.error_rate.sd
            << " mean_size=" << result.model_size.mean
            << " failed=" << result.n_failed << '\n';
  return 0;
}

struct FitOptions {
  std::string train;
  std::string label_col = "label";
  std::string model_out = "model.json";
  double d_frac = 0.9;
  int d_fixed = 0;
  std::string selection = "cv";
  int s = 10;
  int cv_k = 5;
  int cv_s_max = 30;
  double c = 0.5;
  double alpha = 0.3;
  bool fallback_top1 = false;
  bool center = false;
};

int cmd_fit(const FitOptions& o, std::uint64_t seed) {
  using namespace spikelda;
  LabeledDataset train = load_csv(o.train, o.label_col);
  Vector offset;
  if (o.center) {
    offset = train.features.colwise().mean();
    train.features.rowwise() -= offset.transpose();
  }
  PooledStats stats = pooled_covariance(train);
  int d = o.d_fixed;
  if (d <= 0) {
    d = choose_d(stats.eigenvalues_all(), o.d_frac);
    d = std::min<int>(d, std::min<int>(stats.n(), static_cast<int>(stats.p())) - 1);
  }
  SelectionMode sel;
  if (o.selection == "topk") {
    sel = SelectionMode::top_s(o.s);
  } else if (o.selection == "threshold") {
    sel = SelectionMode::threshold(o.c, o.alpha, o.fallback_top1);
  } else {
    std::vector<int> cands;
    for (int s = 1; s <= std::min<int>(o.cv_s_max, static_cast<int>(train.p())); ++s)
      cands.push_back(s);
    auto cv = cv_select_s(train, d, cands, o.cv_k, seed);
    sel = SelectionMode::top_s(cv.s_star);
    std::cerr << "fit: cv selected s = " << cv.s_star << '\n';
  }
  PCLDAModel model = fit_pclda(train, DPolicy::fixed(d), sel);
  if (o.center) model.feature_offset = offset;
  save_model(model, o.model_out);
  std::cerr << "fit: n=" << train.n() << " p=" << train.p() << " d=" << d
            << " |S|=" << model.selected.size() << " -> " << o.model_out << '\n';
  return 0;
}

struct PredictOptions {
  std::string model;
  std::string data;
  std::string label_col = "label";
  std::string out = "-";
};

int cmd_predict(const PredictOptions& o) {
  using namespace spikelda;
  PCLDAModel model = load_model(o.model);

  // The data file may or may not carry a label column; when it does, report
  // the achieved error rate on stderr.
  std::ifstream probe(o.data);
  if (!probe) throw ParseError("csv: cannot open '" + o.data + "'");
  std::string header_line;
  std::getline(probe, header_line);
  probe.close();
  bool has_label = false;
  for (const auto& name : spikelda::detail::split_csv_line(header_line))
    if (name == o.label_col) has_label = true;

  Matrix features;
  std::vector<std::string> truth;
  if (has_label) {
    LabeledDataset ds = load_csv(o.data, o.label_col);
    features = ds.features;
    truth = ds.labels;
  } else {
    // No label column: parse every column as a feature via a temporary label.
    std::ifstream in(o.data);
    std::stringstream patched;
    std::string line;
    std::getline(in, line);
    patched << line << ",__label\n";
    int row = 0;
    while (std::getline(in, line)) {
      if (line.empty() || line == "\r") continue;
      patched << line << ",x" << (row++ % 2) << "\n";
    }
    const std::string tmp = o.data + ".spikelda_tmp.csv";
    {
      std::ofstream t(tmp);
      t << patched.str();
    }
    LabeledDataset ds = load_csv(tmp, "__label");
    std::filesystem::remove(tmp);
    features = ds.features;
  }
  if (features.cols() != model.p())
    throw ValidationError("predict: data has p = " + std::to_string(features.cols()) +
                          " features, model expects " + std::to_string(model.p()));
  if (model.feature_offset.size() > 0)
    features.rowwise() -= model.feature_offset.transpose();
  std::vector<int> pred = predict_pclda_batch(model, features);

  std::ofstream file;
  std::ostream& out = open_output(o.out, file);
  out << "label\n";
  for (int c : pred) out << model.class_labels[static_cast<std::size_t>(c)] << '\n';

  if (has_label) {
    int wrong = 0;
    for (std::size_t i = 0; i < truth.size(); ++i)
      if (truth[i] != model.class_labels[static_cast<std::size_t>(pred[i])]) ++wrong;
    std::cerr << "predict: error " << wrong << "/" << truth.size() << " = "
              << (100.0 * wrong / truth.size()) << "%\n";
  }
  return 0;
}

struct TuneOptions {
  std::string train;
  std::string label_col = "label";
  double d_frac = 0.9;
  int d_fixed = 0;
  int cv_k = 5;
  int cv_s_max = 30;
  std::string out = "-";
};

int cmd_tune(const TuneOptions& o, std::uint64_t seed) {
  using namespace spikelda;
  LabeledDataset train = load_csv(o.train, o.label_col);
  PooledStats stats = pooled_covariance(train);
  int d = o.d_fixed;
  if (d <= 0) {
    d = choose_d(stats.eigenvalues_all(), o.d_frac);
    d = std::min<int>(d, std::min<int>(stats.n(), static_cast<int>(stats.p())) - 1);
  }
  std::vector<int> cands;
  for (int s = 1; s <= std::min<int>(o.cv_s_max, static_cast<int>(train.p())); ++s)
    cands.push_back(s);
  auto cv = cv_select_s(train, d, cands, o.cv_k, seed);
  std::ofstream file;
  std::ostream& out = open_output(o.out, file);
  out << "s,mean_cv_error\n";
  for (const auto& [s, e] : cv.cv_errors)
    out << s << ',' << spikelda::detail::format_g17(e) << '\n';
  std::cerr << "tune: d=" << d << " selected s=" << cv.s_star << '\n';
  return 0;
}

struct DiagnoseOptions {
  std::string theorem = "all";
  int reps = 50;
  std::string grid;
  double c = 0.5;
  double alpha = 0.3;
  std::string out_prefix = "diagnostics";
  bool no_assert = false;
  double inject_bias = 0.0;
  int threads = 0;
  int whitening_n_factor = 50;
  int whitening_p = 40;
};

std::vector<std::pair<int, int>> parse_grid(const std::string& s) {
  // "n:p,n:p,..."
  std::vector<std::pair<int, int>> grid;
  std::stringstream ss(s);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    auto pos = cell.find(':');
    if (pos == std::string::npos)
      throw spikelda::ValidationError("diagnose: bad grid cell '" + cell + "', want n:p");
    grid.emplace_back(std::stoi(cell.substr(0, pos)), std::stoi(cell.substr(pos + 1)));
  }
  if (grid.empty()) throw spikelda::ValidationError("diagnose: empty grid");
  return grid;
}

int cmd_diagnose(const DiagnoseOptions& o, std::uint64_t seed) {
  using namespace spikelda;
  DiagnosticsConfig cfg = DiagnosticsConfig::defaults();
  cfg.reps = o.reps;
  cfg.seed = seed;
  cfg.threads = o.threads;
  cfg.threshold_c = o.c;
  cfg.threshold_alpha = o.alpha;
  cfg.inject_bias = o.inject_bias;
  if (!o.grid.empty()) cfg.grid = parse_grid(o.grid);

  bool ok = true;
  auto emit = [&](const std::string& name, auto writer) {
    const std::string path = o.out_prefix + "_" + name + ".csv";
    std::ofstream f(path);
    if (!f) throw Error("cannot write '" + path + "'");
    writer(f);
    std::cerr << "diagnose: wrote " << path << '\n';
  };

  if (o.theorem == "all" || o.theorem == "1") {
    auto rows = rate_check_theorem1(cfg);
    emit("theorem1", [&](std::ostream& f) { write_rate_csv(rows, f); });
    for (const auto& c : decay_factors(rows)) {
      if (c.metric != "t1_aligned_2inf") continue;
      std::cerr << "diagnose: t1 decay p=" << c.p << " n " << c.n_small << "->" << c.n_big
                << " factor=" << c.factor << (c.ok ? " ok" : " VIOLATION") << '\n';
      if (!c.ok) ok = false;
    }
  }
  if (o.theorem == "all" || o.theorem == "2") {
    auto rows = rate_check_theorem2(cfg);
    emit("theorem2", [&](std::ostream& f) { write_rate_csv(rows, f); });
    for (const auto& c : decay_factors(rows)) {
      std::cerr << "diagnose: t2 decay p=" << c.p << " n " << c.n_small << "->" << c.n_big
                << " factor=" << c.factor << (c.ok ? " ok" : " VIOLATION") << '\n';
      if (!c.ok) ok = false;
    }
  }
  if (o.theorem == "all" || o.theorem == "3") {
    DiagnosticsConfig sel_cfg = cfg;
    if (o.grid.empty()) sel_cfg.grid = {{1000, 800}, {2000, 800}, {4000, 800}};
    auto rows = selection_consistency_check(sel_cfg);
    emit("theorem3", [&](std::ostream& f) { write_selection_csv(rows, f); });
    for (const auto& r : rows)
      std::cerr << "diagnose: t3 recovery n=" << r.n << " p=" << r.p
                << " fraction=" << r.fraction << '\n';
    if (!selection_monotone(rows)) {
      std::cerr << "diagnose: t3 VIOLATION: recovery fraction not monotone in n\n";
      ok = false;
    }
  }
  if (o.theorem == "all" || o.theorem == "whitening") {
    SpikeSpec spike;
    auto res = whitening_identity_check(o.whitening_n_factor, o.whitening_p, spike, 20,
                                        seed);
    emit("whitening", [&](std::ostream& f) {
      f << "n,p,metric,mean,q95,ratio_to_bound\n";
      f << o.whitening_n_factor * o.whitening_p << ',' << o.whitening_p
        << ",whitening_identity_opnorm," << spikelda::detail::format_g17(res.median_deviation)
        << ",nan,nan\n";
    });
    std::cerr << "diagnose: whitening identity median deviation = " << res.median_deviation
              << '\n';
  }
  if (!o.no_assert && !ok) {
    std::cerr << "diagnose: assertion failures detected\n";
    return 4;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spikelda: spiked-covariance whitening LDA toolkit"};
  app.require_subcommand(1);
  app.set_config("--config", "",
                 "Read options from an INI/TOML config file (give before the "
                 "subcommand; subcommand options live in a [subcommand] section)");
  app.set_version_flag("--version", kVersion);

  std::uint64_t seed_flag = spikelda::kDefaultSeed;

  SimulateOptions so;
  auto* sim = app.add_subcommand("simulate", "Run a Monte Carlo benchmark");
  sim->add_option("--model", so.model, "Covariance model")
      ->check(CLI::IsMember({"eqcorr", "blockdiag", "randcorr"}));
  sim->add_option("--rho", so.rho, "Correlation (eqcorr/blockdiag)")
      ->check(CLI::Range(0.0, 0.999999));
  sim->add_option("--p", so.p, "Feature count")->check(CLI::PositiveNumber);
  sim->add_option("--n", so.n, "Training samples per class")->check(CLI::PositiveNumber);
  sim->add_option("--n-test", so.n_test, "Test samples per class")->check(CLI::PositiveNumber);
  sim->add_option("--reps", so.reps, "Monte Carlo replicates")->check(CLI::PositiveNumber);
  sim->add_option("--method", so.method, "Classifier")
      ->check(CLI::IsMember({"pclda", "oracle", "nsc"}));
  sim->add_option("--entry-dist", so.entry_dist, "Model-3 entry distribution")
      ->check(CLI::IsMember({"normal", "uniform", "t5"}));
  sim->add_option("--selection", so.selection, "PCLDA selection policy")
      ->check(CLI::IsMember({"cv", "topk", "threshold"}));
  sim->add_option("--d", so.d_fixed, "Fixed spike count (overrides --d-frac)");
  sim->add_option("--d-frac", so.d_frac, "Variance fraction for choosing d")
      ->check(CLI::Range(0.000001, 0.999999));
  sim->add_option("--s", so.s, "Fixed sparsity for --selection topk");
  sim->add_option("--cv-max", so.cv_s_max, "Largest CV candidate s");
  sim->add_option("--cv-k", so.cv_k, "CV fold count");
  sim->add_option("--C", so.c, "Threshold constant");
  sim->add_option("--alpha", so.alpha, "Threshold exponent")->check(CLI::Range(1e-9, 0.499999));
  sim->add_option("--out", so.out, "Output path, '-' for stdout");
  sim->add_option("--format", so.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
  sim->add_option("--threads", so.threads, "Worker threads (0 = auto)");

  FitOptions fo;
  auto* fit = app.add_subcommand("fit", "Fit a binary PCLDA model from CSV");
  fit->add_option("--train", fo.train, "Training CSV")->required();
  fit->add_option("--label-col", fo.label_col, "Label column name");
  fit->add_option("--model", fo.model_out, "Output model path");
  fit->add_option("--d", fo.d_fixed, "Fixed spike count (overrides --d-frac)");
  fit->add_option("--d-frac", fo.d_frac, "Variance fraction for choosing d")
      ->check(CLI::Range(0.000001, 0.999999));
  fit->add_option("--selection", fo.selection, "Selection policy")
      ->check(CLI::IsMember({"cv", "topk", "threshold"}));
  fit->add_option("--s", fo.s, "Sparsity for --selection topk");
  fit->add_option("--cv-k", fo.cv_k, "CV fold count");
  fit->add_option("--cv-max", fo.cv_s_max, "Largest CV candidate s");
  fit->add_option("--C", fo.c, "Threshold constant");
  fit->add_option("--alpha", fo.alpha, "Threshold exponent")->check(CLI::Range(1e-9, 0.499999));
  fit->add_flag("--fallback-top1", fo.fallback_top1,
                "Fall back to s=1 when thresholding selects nothing");
  fit->add_flag("--center", fo.center, "Center features by their global mean");

  PredictOptions po;
  auto* pred = app.add_subcommand("predict", "Predict labels with a fitted model");
  pred->add_option("--model", po.model, "Model JSON path")->required();
  pred->add_option("--data", po.data, "Feature CSV")->required();
  pred->add_option("--label-col", po.label_col, "Label column name (for error report)");
  pred->add_option("--out", po.out, "Prediction CSV path, '-' for stdout");

  TuneOptions to;
  auto* tune = app.add_subcommand("tune", "Cross-validate the sparsity level s");
  tune->add_option("--train", to.train, "Training CSV")->required();
  tune->add_option("--label-col", to.label_col, "Label column name");
  tune->add_option("--d", to.d_fixed, "Fixed spike count (overrides --d-frac)");
  tune->add_option("--d-frac", to.d_frac, "Variance fraction for choosing d");
  tune->add_option("--cv-k", to.cv_k, "CV fold count");
  tune->add_option("--cv-max", to.cv_s_max, "Largest candidate s");
  tune->add_option("--out", to.out, "Per-candidate CV error CSV, '-' for stdout");

  DiagnoseOptions diag;
  auto* dg = app.add_subcommand("diagnose", "Empirical rate and structure checks");
  dg->add_option("--theorem", diag.theorem, "Which table to produce")
      ->check(CLI::IsMember({"all", "1", "2", "3", "whitening"}));
  dg->add_option("--reps", diag.reps, "Replicates per grid cell")->check(CLI::PositiveNumber);
  dg->add_option("--grid", diag.grid, "Grid cells as n:p,n:p,...");
  dg->add_option("--C", diag.c, "Threshold constant");
  dg->add_option("--alpha", diag.alpha, "Threshold exponent")->check(CLI::Range(1e-9, 0.499999));
  dg->add_option("--out-prefix", diag.out_prefix, "Output file prefix");
  dg->add_flag("--no-assert", diag.no_assert, "Report only, never exit 4");
  dg->add_option("--threads", diag.threads, "Worker threads (0 = auto)");
  dg->add_option("--inject-bias", diag.inject_bias, "Testing hook: bias added to errors")
      ->group("");

  auto* info = app.add_subcommand("info", "Print build and defaults information");

  for (auto* sub : {sim, fit, pred, tune, dg, info})
    sub->add_option("--seed", seed_flag,
                    "RNG seed (default: SPIKELDA_SEED env or built-in constant)");

  try {
    app.parse(argc, argv);
    CLI::App* sub = app.get_subcommands().front();
    const std::uint64_t seed = resolve_seed(sub->get_option("--seed"), seed_flag);
    if (sub == sim) return cmd_simulate(so, seed);
    if (sub == fit) return cmd_fit(fo, seed);
    if (sub == pred) return cmd_predict(po);
    if (sub == tune) return cmd_tune(to, seed);
    if (sub == dg) return cmd_diagnose(diag, seed);
    std::cout << "spikelda " << kVersion << "\n"
              << "default seed: " << spikelda::kDefaultSeed
              << " (override with --seed or SPIKELDA_SEED)\n"
              << "eigen: " << EIGEN_WORLD_VERSION << '.' << EIGEN_MAJOR_VERSION << '.'
              << EIGEN_MINOR_VERSION << "\n"
              << "hardware threads: " << std::thread::hardware_concurrency() << "\n"
              << "subcommands: simulate fit predict tune diagnose info\n";
    return 0;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help/--version
    app.exit(e);
    return 2;
  } catch (const spikelda::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const spikelda::RangeError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const spikelda::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const spikelda::SchemaError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const spikelda::SplitError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const spikelda::InsufficientDataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const spikelda::EmptySelectionError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
}
