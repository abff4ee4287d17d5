#include "cli.hpp"

#include <chrono>
#include <fstream>
#include <iostream>
#include <memory>
#include <new>
#include <sstream>

#include <CLI11.hpp>

#include "fvsggm/error.hpp"
#include "fvsggm/experiments.hpp"
#include "fvsggm/io.hpp"
#include "fvsggm/latent.hpp"
#include "fvsggm/observed.hpp"

namespace fvsggm::cli {

namespace {

using nlohmann::json;

std::vector<Index> parse_index_list(const std::string& text, const char* what) {
  std::vector<Index> out;
  if (text.find("..") != std::string::npos) {
    const auto pos = text.find("..");
    try {
      const long lo = std::stol(text.substr(0, pos));
      const long hi = std::stol(text.substr(pos + 2));
      for (long v = lo; v <= hi; ++v) out.push_back(v);
    } catch (const std::exception&) {
      throw_input(std::string("bad range for ") + what + ": '" + text + "'");
    }
    if (out.empty()) throw_input(std::string("empty range for ") + what);
    return out;
  }
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.find_first_not_of(" \t") == std::string::npos) continue;
    std::size_t used = 0;
    long v = 0;
    try {
      v = std::stol(item, &used);
    } catch (const std::exception&) {
      throw_input(std::string("bad entry in ") + what + ": '" + item + "'");
    }
    if (item.find_first_not_of(" \t", used) != std::string::npos) {
      throw_input(std::string("bad entry in ") + what + ": '" + item + "'");
    }
    out.push_back(v);
  }
  return out;
}

// "none", "auto" or a nonnegative number.
double resolve_ridge(const std::string& text, const SymMatrix& cov) {
  if (text == "none") return 0.0;
  if (text == "auto") return default_ridge(cov);
  double eps = 0.0;
  try {
    std::size_t used = 0;
    eps = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
  } catch (const std::exception&) {
    throw_input("--ridge must be none, auto or a number");
  }
  if (!(eps >= 0.0)) throw_input("--ridge must be nonnegative");
  return eps;
}

struct DataOptions {
  std::string samples;
  std::string cov;
  std::string ridge = "none";
};

void add_data_options(CLI::App* cmd, DataOptions& d) {
  auto* s = cmd->add_option("--samples", d.samples, "CSV of observations (rows) by variables (columns)");
  auto* c = cmd->add_option("--cov", d.cov, "CSV covariance matrix");
  s->excludes(c);
  cmd->add_option("--ridge", d.ridge, "none, auto or eps added to the diagonal")->capture_default_str();
}

struct LoadedStats {
  EmpiricalStats stats;
  double ridge = 0.0;
};

LoadedStats load_stats(const DataOptions& d) {
  if (d.samples.empty() == d.cov.empty()) throw_input("exactly one of --samples or --cov is required");
  LoadedStats out;
  if (!d.samples.empty()) {
    out.stats = empirical_stats(read_csv(d.samples).data);
  } else {
    const CsvTable t = read_csv(d.cov);
    out.stats = stats_from_covariance(SymMatrix::checked(t.data));
  }
  out.ridge = resolve_ridge(d.ridge, out.stats.cov);
  if (out.ridge > 0.0) out.stats.cov = add_ridge(out.stats.cov, out.ridge);
  if (!out.stats.cov.is_pd()) throw_numerical("covariance is not positive definite; try --ridge auto");
  return out;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw_input("cannot write " + path);
  f << text;
}

// ---- learn-observed

struct LearnObservedArgs {
  DataOptions data;
  std::string fvs;
  bool fvs_given = false;
  Index k = -1;
  std::string mode = "greedy";
  std::uint64_t cap = kDefaultEnumerationCap;
  std::string out;
  std::string trace;
  bool with_sigma = false;
};

int learn_observed(const LearnObservedArgs& a, std::ostream& out) {
  if (a.fvs_given == (a.k >= 0)) throw_input("exactly one of --fvs or --k is required");
  const LoadedStats ls = load_stats(a.data);
  const Index n = ls.stats.cov.dim();
  ObservedFit fit;
  std::string algorithm;
  Index iterations = 1;
  std::optional<GreedyTrace> greedy;
  if (a.fvs_given) {
    fit = conditioned_chow_liu(ls.stats, parse_index_list(a.fvs, "--fvs"));
    algorithm = "conditioned_chow_liu";
  } else if (a.mode == "exact") {
    fit = learn_exact_fvs(ls.stats, a.k, a.cap);
    algorithm = "exact_fvs";
  } else if (a.mode == "greedy") {
    greedy = learn_greedy_fvs(ls.stats, a.k);
    fit = greedy->final_fit;
    algorithm = "greedy_fvs";
    iterations = a.k;
  } else {
    throw_input("--mode must be exact or greedy");
  }

  ModelFile mf;
  mf.model = fit.j_ml;
  if (a.with_sigma) mf.sigma = fit.sigma_ml;
  mf.metadata = {{"seed", 0},
                 {"algorithm", algorithm},
                 {"iterations", iterations},
                 {"objective", fit.divergence},
                 {"ridge", ls.ridge},
                 {"samples", ls.stats.samples}};
  write_model_file(a.out, mf);
  if (greedy) {
    const std::string trace = a.trace.empty() ? a.out + ".trace.csv" : a.trace;
    std::ostringstream csv;
    csv << "step,node,d_value\n";
    for (std::size_t s = 0; s < greedy->steps.size(); ++s) {
      csv << s + 1 << ',' << greedy->steps[s].node << ',' << format_double(greedy->steps[s].divergence)
          << '\n';
    }
    write_text(trace, csv.str());
  }
  out << "n " << n << "\nk " << fit.part.k() << "\nfvs";
  for (Index f : fit.part.fvs()) out << ' ' << f;
  out << "\ndivergence " << format_double(fit.divergence) << '\n';
  return 0;
}

// ---- learn-latent

struct LearnLatentArgs {
  DataOptions data;
  Index k = 0;
  Index iters = 40;
  double tol = 1e-9;
  std::uint64_t seed = 0;
  Index seeds = 1;
  std::string out;
  std::string trace;
};

int learn_latent(const LearnLatentArgs& a, std::ostream& out) {
  if (a.k < 1) throw_input("learn-latent requires --k >= 1");
  if (a.iters < 1) throw_input("--iters must be positive");
  if (a.seeds < 1) throw_input("--seeds must be positive");
  const LoadedStats ls = load_stats(a.data);
  std::optional<LatentTrace> best;
  std::uint64_t best_seed = a.seed;
  std::vector<double> finals;
  for (Index s = 0; s < a.seeds; ++s) {
    LatentOptions opt;
    opt.max_iters = a.iters;
    opt.tol = a.tol;
    opt.seed = a.seed + static_cast<std::uint64_t>(s);
    LatentTrace tr = latent_chow_liu(ls.stats.cov, a.k, std::nullopt, opt);
    finals.push_back(tr.final.objective);
    if (!best || tr.final.objective < best->final.objective) {
      best = std::move(tr);
      best_seed = opt.seed;
    }
  }
  const std::string trace = a.trace.empty() ? a.out + ".iters.csv" : a.trace;
  std::ostringstream csv;
  csv << "iter,objective,tree_edge_hash\n";
  for (std::size_t t = 1; t < best->states.size(); ++t) {
    const LatentIterate& it = best->states[t];
    csv << it.iteration << ',' << format_double(it.objective) << ',' << hex64(tree_edge_hash(it.tree_edges))
        << '\n';
  }
  write_text(trace, csv.str());

  ModelFile mf;
  mf.model = best->final.model;
  mf.metadata = {{"seed", best_seed},
                 {"algorithm", "latent_chow_liu"},
                 {"iterations", best->final.iteration},
                 {"objective", best->final.objective},
                 {"initial_objective", best->states.front().objective},
                 {"ridge", ls.ridge},
                 {"converged", best->converged},
                 {"seed_objectives", finals},
                 {"latent_nodes", a.k}};
  write_model_file(a.out, mf);
  out << "initial_objective " << format_double(best->states.front().objective) << "\nfinal_objective "
      << format_double(best->final.objective) << "\niterations " << best->final.iteration << '\n';
  return 0;
}

// ---- infer

struct InferArgs {
  std::string model;
  std::string h;
  std::string out;
};

int infer(const InferArgs& a, std::ostream& out) {
  ModelFile mf = read_model_file(a.model);
  FvsModel& m = mf.model;
  if (!a.h.empty()) {
    const MatrixXd h = read_csv(a.h).data;
    if (h.size() != m.n()) throw_input("--h must contain n values");
    m.h = Eigen::Map<const VectorXd>(h.data(), h.size());
    if (h.rows() > 1 && h.cols() > 1) throw_input("--h must be a single row or column");
  }
  const double ld = fvs_log_det(m);
  const double lz = log_partition(m);
  const Marginals mg = fvs_marginals(m);
  out << "log_det " << format_double(ld) << "\nlog_partition " << format_double(lz) << '\n';
  if (!a.out.empty()) {
    MatrixXd table(m.n(), 3);
    for (Index i = 0; i < m.n(); ++i) table.row(i) << static_cast<double>(i), mg.mean(i), mg.variance(i);
    write_csv_file(a.out, {"node", "mean", "variance"}, table);
  }
  return 0;
}

// ---- gen

struct GenArgs {
  Index n = 0;
  Index k = 0;
  double hurst = 0.2;
  std::uint64_t seed = 0;
  Index samples = 0;
  std::string out;
  std::string truth;
};

int gen_fbm(const GenArgs& a, std::ostream& out) {
  const SymMatrix s = fbm_covariance(a.n, a.hurst);
  write_csv_file(a.out, {}, s.dense());
  out << "wrote " << a.n << "x" << a.n << " fBM covariance (H=" << a.hurst << ", t_i=i/n)\n";
  return 0;
}

int gen_random(const GenArgs& a, std::ostream& out) {
  if (a.samples < 0) throw_input("--samples must be nonnegative");
  const FvsModel truth = random_fvs_model(a.n, a.k, a.seed);
  const MatrixXd j = truth.assemble();
  const SymMatrix sigma(MatrixXd(j.llt().solve(MatrixXd::Identity(a.n, a.n))));
  if (a.samples > 0) {
    const MatrixXd x =
        sample_gaussian(GaussianDensity::zero_mean(sigma), a.samples, a.seed ^ 0x9e3779b97f4a7c15ULL);
    write_csv_file(a.out, {}, x);
  } else {
    write_csv_file(a.out, {}, sigma.dense());
  }
  ModelFile mf;
  mf.model = truth;
  mf.metadata = {{"seed", a.seed}, {"algorithm", "random_fvs_model"}, {"iterations", 0},
                 {"objective", 0.0}, {"ridge", 0.0}, {"samples", a.samples}};
  write_model_file(a.truth.empty() ? a.out + ".truth.json" : a.truth, mf);
  out << "wrote " << (a.samples > 0 ? "samples" : "covariance") << " for n=" << a.n << " k=" << a.k
      << " seed=" << a.seed << '\n';
  return 0;
}

// ---- sweep

struct SweepArgs {
  std::string n_list = "32,64";
  std::string k_list = "0..7";
  double hurst = 0.2;
  Index iters = 40;
  Index seeds = 3;
  std::uint64_t seed = 0;
  std::string out;
  // recovery
  Index runs = 100;
  Index n = 20;
  Index k = 3;
  Index samples = 1000;
};

int sweep_fbm(const SweepArgs& a, std::ostream& out) {
  const auto ns = parse_index_list(a.n_list, "--n");
  const auto ks = parse_index_list(a.k_list, "--k");
  if (ns.empty()) throw_input("--n list is empty");
  if (ks.empty()) throw_input("--k list is empty");
  if (a.seeds < 1) throw_input("--seeds must be positive");
  std::vector<std::uint64_t> seeds;
  for (Index s = 0; s < a.seeds; ++s) seeds.push_back(a.seed + static_cast<std::uint64_t>(s));
  std::ostringstream csv;
  csv << "n,k,kl,kl_ratio_vs_tree,iterations,best_seed,hurst,wall_seconds\n";
  json meta = {{"grid", "t_i=i/n"}, {"hurst", a.hurst}, {"seeds", seeds}, {"iters", a.iters},
               {"algorithm", "latent_chow_liu"}, {"runs", json::array()}};
  for (Index n : ns) {
    const SweepResult r = kl_vs_k_sweep(fbm_covariance(n, a.hurst), ks, a.iters, seeds);
    for (const SweepRow& row : r.rows) {
      csv << row.n << ',' << row.k << ',' << format_double(row.kl) << ','
          << format_double(row.kl_ratio_vs_tree) << ',' << row.iterations << ',' << row.best_seed << ','
          << format_double(a.hurst) << ',' << format_double(row.wall_seconds) << '\n';
      meta["runs"].push_back({{"n", row.n}, {"k", row.k}, {"seed_objectives", row.seed_objectives}});
    }
  }
  if (a.out.empty()) {
    out << csv.str();
  } else {
    write_text(a.out, csv.str());
    write_text(a.out + ".meta.json", meta.dump(1) + "\n");
  }
  return 0;
}

int sweep_recovery(const SweepArgs& a, std::ostream& out) {
  const RecoveryReport rep = greedy_recovery_study(a.runs, a.n, a.k, a.samples, a.seed);
  std::ostringstream summary;
  summary << "runs,successes,n,k,samples,seed\n"
          << rep.runs << ',' << rep.successes << ',' << a.n << ',' << a.k << ',' << a.samples << ','
          << a.seed << '\n';
  if (a.out.empty()) {
    out << summary.str();
  } else {
    write_text(a.out, summary.str());
    std::ostringstream runs;
    runs << "run,seed,success,fvs_match,tree_match\n";
    for (std::size_t r = 0; r < rep.per_run.size(); ++r) {
      const RecoveryRun& x = rep.per_run[r];
      runs << r << ',' << x.seed << ',' << x.success() << ',' << x.fvs_match << ',' << x.tree_match << '\n';
    }
    write_text(a.out + ".runs.csv", runs.str());
    out << "successes " << rep.successes << '/' << rep.runs << '\n';
  }
  return 0;
}

// ---- bench

struct BenchArgs {
  std::string n_list = "500,1000,2000";
  Index k = 5;
  std::uint64_t seed = 0;
  Index reps = 3;
  bool dense = true;
  std::string out;
};

int bench(const BenchArgs& a, std::ostream& out) {
  using clock = std::chrono::steady_clock;
  const auto ns = parse_index_list(a.n_list, "--n");
  if (ns.empty()) throw_input("--n list is empty");
  if (a.reps < 1) throw_input("--reps must be positive");
  std::ostringstream csv;
  csv << "n,k,fvs_seconds,dense_seconds,log_det,abs_diff\n";
  for (Index n : ns) {
    const FvsModel m = random_fvs_model(n, a.k, a.seed + static_cast<std::uint64_t>(n), DiagonalLoading::RowSum);
    double ld = 0.0;
    double best = std::numeric_limits<double>::infinity();
    for (Index r = 0; r < a.reps; ++r) {
      const auto t0 = clock::now();
      ld = fvs_log_det(m);
      best = std::min(best, std::chrono::duration<double>(clock::now() - t0).count());
    }
    double dense_s = std::numeric_limits<double>::quiet_NaN();
    double diff = std::numeric_limits<double>::quiet_NaN();
    if (a.dense) {
      const auto t0 = clock::now();
      const double dl = SymMatrix(m.assemble()).log_det();
      dense_s = std::chrono::duration<double>(clock::now() - t0).count();
      diff = std::abs(dl - ld);
    }
    csv << n << ',' << a.k << ',' << format_double(best) << ',' << format_double(dense_s) << ','
        << format_double(ld) << ',' << format_double(diff) << '\n';
  }
  if (a.out.empty()) out << csv.str();
  else write_text(a.out, csv.str());
  return 0;
}

int exit_code(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::Input: return 2;
    case ErrorKind::Numerical: return 3;
    case ErrorKind::Resource: return 4;
  }
  return 3;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Feedback-vertex-set Gaussian graphical models: learning and inference", "fvsggm"};
  app.require_subcommand(1);
  std::function<int()> action;

  LearnObservedArgs lo;
  auto* lo_cmd = app.add_subcommand("learn-observed", "ML FVS model from fully observed data");
  add_data_options(lo_cmd, lo.data);
  auto* fvs_opt = lo_cmd->add_option("--fvs", lo.fvs, "comma list of feedback nodes (may be empty)");
  lo_cmd->add_option("--k", lo.k, "FVS size to search for");
  lo_cmd->add_option("--mode", lo.mode, "exact or greedy")->capture_default_str();
  lo_cmd->add_option("--cap", lo.cap, "maximum subsets for exact search")->capture_default_str();
  lo_cmd->add_option("--out", lo.out, "model JSON path")->required();
  lo_cmd->add_option("--trace", lo.trace, "greedy step CSV (default <out>.trace.csv)");
  lo_cmd->add_flag("--with-sigma", lo.with_sigma, "embed the ML covariance in the model file");
  lo_cmd->callback([&] {
    lo.fvs_given = fvs_opt->count() > 0;
    action = [&] { return learn_observed(lo, out); };
  });

  LearnLatentArgs ll;
  auto* ll_cmd = app.add_subcommand("learn-latent", "latent-FVS model by alternating projections");
  add_data_options(ll_cmd, ll.data);
  ll_cmd->add_option("--k", ll.k, "number of latent feedback nodes (>= 1)")->required();
  ll_cmd->add_option("--iters", ll.iters, "maximum iterations")->capture_default_str();
  ll_cmd->add_option("--tol", ll.tol, "stop when the decrease drops below this")->capture_default_str();
  ll_cmd->add_option("--seed", ll.seed, "first initialization seed")->capture_default_str();
  ll_cmd->add_option("--seeds", ll.seeds, "number of seeds; the best final objective is kept")
      ->capture_default_str();
  ll_cmd->add_option("--out", ll.out, "model JSON path")->required();
  ll_cmd->add_option("--trace", ll.trace, "iteration CSV (default <out>.iters.csv)");
  ll_cmd->callback([&] { action = [&] { return learn_latent(ll, out); }; });

  InferArgs in;
  auto* in_cmd = app.add_subcommand("infer", "log det, log partition and marginals of a model");
  in_cmd->add_option("--model", in.model, "model JSON")->required();
  in_cmd->set_help_flag("--help", "Print this help message and exit");
  in_cmd->add_option("--h", in.h, "potential vector CSV (n values)");
  in_cmd->add_option("--out", in.out, "marginals CSV (node, mean, variance)");
  in_cmd->callback([&] { action = [&] { return infer(in, out); }; });

  GenArgs gf, gr;
  auto* gen_cmd = app.add_subcommand("gen", "synthetic covariances and samples");
  gen_cmd->require_subcommand(1);
  auto* fbm_cmd = gen_cmd->add_subcommand("fbm", "fractional Brownian motion covariance");
  fbm_cmd->add_option("--n", gf.n, "time samples")->required();
  fbm_cmd->add_option("--hurst", gf.hurst, "Hurst parameter in (0, 1)")->capture_default_str();
  fbm_cmd->add_option("--out", gf.out, "covariance CSV")->required();
  fbm_cmd->callback([&] { action = [&] { return gen_fbm(gf, out); }; });
  auto* rnd_cmd = gen_cmd->add_subcommand("random", "random FVS model, its covariance or samples");
  rnd_cmd->add_option("--n", gr.n, "nodes")->required();
  rnd_cmd->add_option("--k", gr.k, "FVS size")->required();
  rnd_cmd->add_option("--seed", gr.seed)->capture_default_str();
  rnd_cmd->add_option("--samples", gr.samples, "draw this many samples instead of writing the covariance");
  rnd_cmd->add_option("--out", gr.out, "CSV path")->required();
  rnd_cmd->add_option("--truth", gr.truth, "truth model JSON (default <out>.truth.json)");
  rnd_cmd->callback([&] { action = [&] { return gen_random(gr, out); }; });

  SweepArgs sf, sr;
  auto* sweep_cmd = app.add_subcommand("sweep", "experiment drivers");
  sweep_cmd->require_subcommand(1);
  auto* sf_cmd = sweep_cmd->add_subcommand("fbm", "latent K-L divergence versus FVS size on fBM");
  sf_cmd->add_option("--n", sf.n_list, "comma list of sizes")->capture_default_str();
  sf_cmd->add_option("--k", sf.k_list, "FVS sizes: a..b or comma list")->capture_default_str();
  sf_cmd->add_option("--hurst", sf.hurst)->capture_default_str();
  sf_cmd->add_option("--iters", sf.iters)->capture_default_str();
  sf_cmd->add_option("--seeds", sf.seeds, "seeds per k")->capture_default_str();
  sf_cmd->add_option("--seed", sf.seed, "first seed")->capture_default_str();
  sf_cmd->add_option("--out", sf.out, "CSV path (stdout when omitted)");
  sf_cmd->callback([&] { action = [&] { return sweep_fbm(sf, out); }; });
  auto* sr_cmd = sweep_cmd->add_subcommand("recovery", "greedy structure recovery on random models");
  sr_cmd->add_option("--runs", sr.runs)->capture_default_str();
  sr_cmd->add_option("--n", sr.n)->capture_default_str();
  sr_cmd->add_option("--k", sr.k)->capture_default_str();
  sr_cmd->add_option("--samples", sr.samples)->capture_default_str();
  sr_cmd->add_option("--seed", sr.seed)->capture_default_str();
  sr_cmd->add_option("--out", sr.out, "summary CSV (stdout when omitted)");
  sr_cmd->callback([&] { action = [&] { return sweep_recovery(sr, out); }; });

  BenchArgs bn;
  auto* bench_cmd = app.add_subcommand("bench", "log-determinant timing against dense Cholesky");
  bench_cmd->add_option("--n", bn.n_list)->capture_default_str();
  bench_cmd->add_option("--k", bn.k)->capture_default_str();
  bench_cmd->add_option("--seed", bn.seed)->capture_default_str();
  bench_cmd->add_option("--reps", bn.reps)->capture_default_str();
  bench_cmd->add_flag("!--no-dense", bn.dense, "skip the dense oracle");
  bench_cmd->add_option("--out", bn.out, "CSV path (stdout when omitted)");
  bench_cmd->callback([&] { action = [&] { return bench(bn, out); }; });

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    app.exit(e, out, err);
    return 0;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 2;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code(e);
  }

  try {
    return action();
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code(e);
  } catch (const std::bad_alloc&) {
    err << "error: out of memory\n";
    return 4;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 3;
  }
}

}  // namespace fvsggm::cli
