// Command-line surface: data ingestion, pipeline invocation, metric and
// ledger reporting, benchmark sweeps.

#include <Eigen/Eigenvalues>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"
#include "coresketch/clustering.hpp"
#include "coresketch/coreset.hpp"
#include "coresketch/errors.hpp"
#include "coresketch/io.hpp"
#include "coresketch/kernel.hpp"
#include "coresketch/lowrank.hpp"
#include "coresketch/report.hpp"
#include "coresketch/sampler.hpp"
#include "coresketch/tensor_lowrank.hpp"
#include "coresketch/weights.hpp"

using namespace coresketch;

namespace {

struct Flags {
  std::string input;
  Index k = 0;
  double p = 2.0;
  double eps = 0.5;
  double delta = 0.1;
  std::uint64_t seed = 0;
  Index size = 0;
  double oversample = 1.0;
  std::string kernel = "rbf:1.0";
  bool stress = false;
  std::string output;
  std::string report;
  std::string loss_file;
  bool timing = false;
};

void add_common(CLI::App* cmd, Flags& f, bool needs_input = true) {
  auto* in = cmd->add_option("--input", f.input, "input data file");
  if (needs_input) in->required();
  cmd->add_option("--k", f.k, "rank / number of centers");
  cmd->add_option("--p", f.p, "cost exponent");
  cmd->add_option("--eps", f.eps, "target accuracy");
  cmd->add_option("--delta", f.delta, "failure budget");
  cmd->add_option("--seed", f.seed, "random seed (default 0)");
  cmd->add_option("--size", f.size, "sample size override");
  cmd->add_option("--oversample", f.oversample, "oversampling multiplier");
  cmd->add_option("--kernel", f.kernel, "kernel: linear | poly[:deg] | rbf[:gamma]");
  cmd->add_flag("--stress", f.stress, "perturb internal estimates by (1 +- eps/2)");
  cmd->add_option("--output", f.output, "output path (CSV or prefix for factors)");
  cmd->add_option("--report", f.report, "JSON report path, '-' for stdout");
  cmd->add_option("--loss", f.loss_file, "loss lookup file (center index,loss)");
  cmd->add_flag("--timing", f.timing,
                "record wall time in the report (breaks byte-identical reruns)");
}

DenseMatrix load_matrix(const std::string& path) {
  if (path.size() > 4 && path.substr(path.size() - 4) == ".mtx")
    return io::read_matrix_market(path);
  return io::read_csv(path);
}

KernelSpec parse_kernel(const std::string& text, DenseMatrix points) {
  KernelSpec spec;
  spec.points = std::move(points);
  std::string name = text;
  double param = 0.0;
  bool has_param = false;
  if (auto pos = text.find(':'); pos != std::string::npos) {
    name = text.substr(0, pos);
    param = std::stod(text.substr(pos + 1));
    has_param = true;
  }
  if (name == "linear") {
    spec.kind = KernelSpec::Kind::kLinear;
  } else if (name == "poly") {
    spec.kind = KernelSpec::Kind::kPolynomial;
    spec.degree = has_param ? static_cast<int>(param) : 2;
  } else if (name == "rbf") {
    spec.kind = KernelSpec::Kind::kRbf;
    spec.gamma = has_param ? param : 1.0;
  } else {
    throw ContractError("unknown kernel '" + name + "'");
  }
  return spec;
}

void write_subset_csv(const std::string& path, const WeightedSubset& ws) {
  if (path.empty()) return;
  std::ofstream out(path);
  if (!out) throw ContractError("cannot open " + path);
  out.precision(17);
  out << "index,weight\n";
  for (std::size_t i = 0; i < ws.indices.size(); ++i)
    out << ws.indices[i] << ',' << ws.weights[i] << '\n';
}

void write_factors(const std::string& prefix, const FactoredLowRank& f) {
  if (prefix.empty()) return;
  io::write_csv(prefix + ".left.csv", f.left);
  io::write_csv(prefix + ".right.csv", f.right);
}

double spectral_ratio(const DenseMatrix& bw, const DenseMatrix& a) {
  DenseMatrix ga = a.transpose() * a;
  DenseMatrix gb = bw.transpose() * bw;
  Eigen::SelfAdjointEigenSolver<DenseMatrix> ea(ga);
  const double cut = 1e-10 * ea.eigenvalues().maxCoeff();
  std::vector<Index> keep;
  for (Index i = 0; i < ea.eigenvalues().size(); ++i)
    if (ea.eigenvalues()[i] > cut) keep.push_back(i);
  DenseMatrix basis(ga.rows(), static_cast<Index>(keep.size()));
  Vector scale(static_cast<Index>(keep.size()));
  for (std::size_t j = 0; j < keep.size(); ++j) {
    basis.col(static_cast<Index>(j)) = ea.eigenvectors().col(keep[j]);
    scale[static_cast<Index>(j)] = 1.0 / std::sqrt(ea.eigenvalues()[keep[j]]);
  }
  DenseMatrix white = scale.asDiagonal() * basis.transpose() * gb * basis * scale.asDiagonal();
  Eigen::SelfAdjointEigenSolver<DenseMatrix> ew(white);
  const double lo = std::max(ew.eigenvalues().minCoeff(), 1e-12);
  const double hi = ew.eigenvalues().maxCoeff();
  return std::max(hi, 1.0 / lo);
}

RunReport base_report(const std::string& task, const Flags& f) {
  RunReport r;
  r.task = task;
  r.k = f.k;
  r.p = f.p;
  r.eps = f.eps;
  r.delta = f.delta;
  r.seed = f.seed;
  r.deviations = {"simulated-quantum"};
  return r;
}

int finish(RunReport& r, const Flags& f,
           std::chrono::steady_clock::time_point start) {
  if (f.timing) {
    r.wall_time_ms = static_cast<std::uint64_t>(
        std::chrono::duration_cast<std::chrono::milliseconds>(
            std::chrono::steady_clock::now() - start)
            .count());
  }
  if (!f.report.empty()) r.write(f.report);
  return 0;
}

int run_coreset_l2(const Flags& f) {
  auto start = std::chrono::steady_clock::now();
  DenseMatrix a = load_matrix(f.input);
  RunReport r = base_report("coreset-l2", f);
  r.n = a.rows();
  r.d = a.cols();
  WeightedSubset ws;
  if (f.size > 0) {
    SchemeConfig cfg;
    cfg.eps = f.eps;
    cfg.delta = f.delta;
    cfg.c_final = f.oversample;
    ws = iterate_sample(a, cfg, std::min<Index>(f.size, a.rows()),
                        std::max<Index>(a.cols() + 1, f.size / 4), r.ledger, f.seed);
  } else {
    ws = l2_coreset(a, f.eps, f.delta, r.ledger, f.seed);
  }
  r.coreset_size = ws.size();
  r.cost_ratio = spectral_ratio(ws.gather(a, 2.0), a);
  write_subset_csv(f.output, ws);
  return finish(r, f, start);
}

int run_coreset_lp(const Flags& f) {
  auto start = std::chrono::steady_clock::now();
  DenseMatrix a = load_matrix(f.input);
  RunReport r = base_report("coreset-lp", f);
  r.n = a.rows();
  r.d = a.cols();
  WeightedSubset ws = lp_coreset(a, f.p, f.eps, f.delta, r.ledger, f.seed, f.oversample);
  r.coreset_size = ws.size();

  DenseMatrix sa = ws.gather(a, f.p);
  RngStream rng = RngStream(f.seed).derive("lp_eval");
  double worst = 1.0;
  for (int t = 0; t < 200; ++t) {
    Vector x(a.cols());
    for (Index j = 0; j < a.cols(); ++j) x[j] = rng.next_gaussian();
    double full = 0.0, sub = 0.0;
    Vector ax = a * x, sx = sa * x;
    for (Index i = 0; i < ax.size(); ++i) full += std::pow(std::abs(ax[i]), f.p);
    for (Index i = 0; i < sx.size(); ++i) sub += std::pow(std::abs(sx[i]), f.p);
    if (full > 0.0) worst = std::max({worst, sub / full, full / sub});
  }
  r.cost_ratio = worst;
  write_subset_csv(f.output, ws);
  return finish(r, f, start);
}

int run_coreset_ridge(const Flags& f) {
  auto start = std::chrono::steady_clock::now();
  DenseMatrix a = load_matrix(f.input);
  if (f.k < 1) throw ContractError("coreset-ridge requires --k");
  RunReport r = base_report("coreset-ridge", f);
  r.n = a.rows();
  r.d = a.cols();
  WeightedSubset ws = column_pcp(a, f.k, f.eps, f.delta, r.ledger, f.seed,
                                 0.35 * f.oversample);
  r.coreset_size = ws.size();

  DenseMatrix cw = ws.gather(a, 2.0).transpose();
  RngStream rng = RngStream(f.seed).derive("ridge_eval");
  double worst = 1.0;
  for (int t = 0; t < 100; ++t) {
    DenseMatrix g(a.rows(), f.k);
    for (Index i = 0; i < g.rows(); ++i)
      for (Index j = 0; j < f.k; ++j) g(i, j) = rng.next_gaussian();
    ThinSVD qr = thin_svd(g);
    DenseMatrix p = qr.U.leftCols(std::min<Index>(f.k, qr.rank()));
    const double full = (a - p * (p.transpose() * a)).squaredNorm();
    const double sub = (cw - p * (p.transpose() * cw)).squaredNorm();
    if (full > 0.0 && sub > 0.0) worst = std::max({worst, sub / full, full / sub});
  }
  r.cost_ratio = worst;
  write_subset_csv(f.output, ws);
  return finish(r, f, start);
}

int run_coreset_cluster(const Flags& f) {
  auto start = std::chrono::steady_clock::now();
  DenseMatrix a = load_matrix(f.input);
  if (f.k < 1) throw ContractError("coreset-cluster requires --k");
  RunReport r = base_report("coreset-cluster", f);
  r.n = a.rows();
  r.d = a.cols();
  r.deviations.push_back("bicriteria-classical");
  ClusterOptions opts;
  opts.target_size = f.size;
  opts.stress = f.stress;
  WeightedSubset ws = qcluster(a, f.k, f.p, f.eps, r.ledger, f.seed, opts);
  r.coreset_size = ws.size();

  RngStream rng = RngStream(f.seed).derive("cluster_eval");
  double worst = 1.0;
  for (int t = 0; t < 100; ++t) {
    CenterSet cs;
    cs.p = f.p;
    cs.centers = DenseMatrix(f.k, a.cols());
    for (Index j = 0; j < f.k; ++j) {
      const Index pick = static_cast<Index>(rng.next_below(static_cast<std::uint64_t>(a.rows())));
      cs.centers.row(j) = a.row(pick);
      for (Index c = 0; c < a.cols(); ++c) cs.centers(j, c) += 0.25 * rng.next_gaussian();
    }
    const double full = clustering_cost(a, cs, f.p);
    double sub = 0.0;
    for (std::size_t i = 0; i < ws.indices.size(); ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (Index j = 0; j < f.k; ++j)
        best = std::min(best,
                        (a.row(static_cast<Index>(ws.indices[i])) - cs.centers.row(j)).norm());
      sub += ws.weights[i] * std::pow(best, f.p);
    }
    if (full > 0.0 && sub > 0.0) worst = std::max({worst, sub / full, full / sub});
  }
  r.cost_ratio = worst;
  write_subset_csv(f.output, ws);
  return finish(r, f, start);
}

int run_lowrank_matrix(const Flags& f) {
  auto start = std::chrono::steady_clock::now();
  DenseMatrix a = load_matrix(f.input);
  if (f.k < 1) throw ContractError("lowrank-matrix requires --k");
  RunReport r = base_report("lowrank-matrix", f);
  r.n = a.rows();
  r.d = a.cols();
  FactoredLowRank lr = qlowrank(a, f.k, f.eps, r.ledger, f.seed);
  r.coreset_size = lr.left.cols();

  ThinSVD svd = thin_svd(a);
  const double tail = tail_energy(svd.sigma, f.k);
  const double resid = (a - lr.materialize()).squaredNorm();
  r.cost_ratio = tail > 0.0 ? resid / tail : (resid <= 1e-9 * a.squaredNorm() ? 1.0 : resid);
  write_factors(f.output, lr);
  return finish(r, f, start);
}

int run_lowrank_kernel(const Flags& f) {
  auto start = std::chrono::steady_clock::now();
  DenseMatrix pts = load_matrix(f.input);
  if (f.k < 1) throw ContractError("lowrank-kernel requires --k");
  KernelSpec spec = parse_kernel(f.kernel, pts);
  RunReport r = base_report("lowrank-kernel", f);
  r.n = pts.rows();
  r.d = pts.cols();
  FactoredLowRank lr = qlowrank_kernel(spec, f.k, f.eps, f.delta, r.ledger, f.seed);
  r.coreset_size = lr.left.cols();

  DenseMatrix kfull = spec.dense_free();
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(kfull);
  double tail = 0.0;
  for (Index i = 0; i < es.eigenvalues().size() - f.k; ++i)
    tail += es.eigenvalues()[i] * es.eigenvalues()[i];
  const double resid = (kfull - lr.materialize()).squaredNorm();
  r.cost_ratio = tail > 0.0 ? resid / tail : (resid <= 1e-9 * kfull.squaredNorm() ? 1.0 : resid);
  write_factors(f.output, lr);
  return finish(r, f, start);
}

int run_lowrank_tensor(const Flags& f) {
  auto start = std::chrono::steady_clock::now();
  Tensor3 t = io::read_tensor3(f.input);
  if (f.k < 1) throw ContractError("lowrank-tensor requires --k");
  RunReport r = base_report("lowrank-tensor", f);
  r.n = t.dims[0];
  r.d = t.dims[1] * t.dims[2];
  r.deviations.push_back("als-fallback");
  CPFactors factors = bicriteria(t, f.k, f.eps, r.ledger, f.seed);
  r.coreset_size = factors.r;

  const double resid = factors.residual_sq(t);
  AlsResult baseline = als_cp(t, DenseMatrix::Identity(t.dims[0], t.dims[0]),
                              DenseMatrix::Identity(t.dims[1], t.dims[1]),
                              DenseMatrix::Identity(t.dims[2], t.dims[2]), f.k, 3, 25,
                              f.seed + 1);
  r.cost_ratio = baseline.residual_sq > 0.0
                     ? resid / baseline.residual_sq
                     : (resid <= 1e-9 * t.squared_frobenius() ? 1.0 : resid);
  if (!f.output.empty()) {
    io::write_csv(f.output + ".u.csv", factors.u);
    io::write_csv(f.output + ".v.csv", factors.v);
    io::write_csv(f.output + ".w.csv", factors.w);
  }
  return finish(r, f, start);
}

int run_curt(const Flags& f) {
  auto start = std::chrono::steady_clock::now();
  Tensor3 t = io::read_tensor3(f.input);
  if (f.k < 1) throw ContractError("curt requires --k");
  RunReport r = base_report("curt", f);
  r.n = t.dims[0];
  r.d = t.dims[1] * t.dims[2];
  r.deviations.push_back("als-fallback");
  CURT sel = crt_select(t, f.k, f.eps, r.ledger, f.seed);
  sel.core = best_core(t, sel.c, sel.r, sel.t);
  sel.has_core = true;
  r.coreset_size = static_cast<Index>(sel.col_idx.size() + sel.row_idx.size() +
                                      sel.tube_idx.size());

  const double resid = sel.residual_sq(t);
  AlsResult baseline = als_cp(t, DenseMatrix::Identity(t.dims[0], t.dims[0]),
                              DenseMatrix::Identity(t.dims[1], t.dims[1]),
                              DenseMatrix::Identity(t.dims[2], t.dims[2]), f.k, 3, 25,
                              f.seed + 1);
  r.cost_ratio = baseline.residual_sq > 0.0
                     ? resid / baseline.residual_sq
                     : (resid <= 1e-9 * t.squared_frobenius() ? 1.0 : resid);
  if (!f.output.empty()) {
    io::write_csv(f.output + ".cols.csv", sel.c);
    io::write_csv(f.output + ".rows.csv", sel.r);
    io::write_csv(f.output + ".tubes.csv", sel.t);
  }
  return finish(r, f, start);
}

int run_select_data(const Flags& f) {
  auto start = std::chrono::steady_clock::now();
  DenseMatrix a = load_matrix(f.input);
  if (f.k < 1) throw ContractError("select-data requires --k");
  RunReport r = base_report("select-data", f);
  r.n = a.rows();
  r.d = a.cols();
  r.deviations.push_back("bicriteria-classical");

  CenterSet centers = bicriteria_centers(a, f.k, f.p, f.seed);
  // reduce the bicriteria set to k representatives for the loss interface
  if (centers.size() > f.k) {
    CenterSet trimmed;
    trimmed.p = f.p;
    trimmed.centers = centers.centers.topRows(f.k);
    centers = trimmed;
  }

  std::map<Index, double> lookup;
  if (!f.loss_file.empty()) {
    DenseMatrix table = io::read_csv(f.loss_file);
    if (table.cols() != 2) throw ContractError("loss file must have two columns: index,loss");
    for (Index i = 0; i < table.rows(); ++i)
      lookup[static_cast<Index>(table(i, 0))] = table(i, 1);
  }
  Index next_center = 0;
  std::map<std::string, double> memo;
  auto loss = [&](const Vector& e) -> double {
    if (lookup.empty()) return e.squaredNorm();  // built-in synthetic loss
    const Index idx = next_center++ % centers.size();
    auto it = lookup.find(idx);
    if (it == lookup.end()) throw ContractError("loss file misses center " + std::to_string(idx));
    return it->second;
  };

  DataSelection sel = qdata_selection(a, centers, loss, Vector(), f.eps, r.ledger, f.seed);
  r.coreset_size = sel.subset.size();

  // achieved estimator error relative to the advertised bound
  PartitionOracle part = PartitionOracle::build(a, centers);
  Vector center_loss(centers.size());
  for (Index j = 0; j < centers.size(); ++j)
    center_loss[j] = lookup.empty() ? centers.centers.row(j).squaredNorm()
                                    : lookup.at(j % centers.size());
  auto point_loss = [&](Index i) {
    return lookup.empty() ? a.row(i).squaredNorm()
                          : center_loss[part.assign[static_cast<std::size_t>(i)]];
  };
  double truth = 0.0;
  for (Index i = 0; i < a.rows(); ++i) truth += point_loss(i);
  double est = 0.0;
  for (std::size_t i = 0; i < sel.subset.indices.size(); ++i)
    est += sel.subset.weights[i] * point_loss(static_cast<Index>(sel.subset.indices[i]));
  double cost_l = 0.0;
  for (Index i = 0; i < a.rows(); ++i) cost_l += part.dist_p[i];
  const double bound = f.eps * (truth + 2.0 * cost_l);
  r.cost_ratio = bound > 0.0 ? std::abs(truth - est) / bound : 0.0;
  write_subset_csv(f.output, sel.subset);
  return finish(r, f, start);
}

int run_bench_queries(const Flags& f) {
  auto start = std::chrono::steady_clock::now();
  RunReport r = base_report("bench-queries", f);
  const Index s = f.size > 0 ? f.size : 256;

  std::string table = "n,s,oracle_calls,simulated_quantum_queries,normalized\n";
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (int e = 10; e <= 16; ++e) {
    const std::size_t n = std::size_t(1) << e;
    QueryLedger ledger;
    ledger.budget_constant = r.ledger.budget_constant;
    const double prob = static_cast<double>(s) / static_cast<double>(n);
    qsample(n, [&](std::size_t) { return prob; }, ledger, f.seed + static_cast<std::uint64_t>(e));
    const double norm =
        static_cast<double>(ledger.simulated_quantum_queries) /
        (std::sqrt(static_cast<double>(n) * static_cast<double>(s)) *
         (1.0 + std::log2(static_cast<double>(n))));
    lo = std::min(lo, norm);
    hi = std::max(hi, norm);
    table += std::to_string(n) + "," + std::to_string(s) + "," +
             std::to_string(ledger.oracle_calls) + "," +
             std::to_string(ledger.simulated_quantum_queries) + "," + std::to_string(norm) +
             "\n";
    r.ledger += ledger;
    r.n = static_cast<Index>(n);
  }
  r.d = 0;
  r.coreset_size = s;
  r.cost_ratio = hi / lo;
  if (!f.output.empty()) {
    std::ofstream out(f.output);
    if (!out) throw ContractError("cannot open " + f.output);
    out << table;
  } else {
    std::cerr << table;
  }
  return finish(r, f, start);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"coreset construction and sampled low-rank approximation with "
               "simulated quantum query accounting"};
  app.require_subcommand(1);

  std::map<std::string, Flags> flags;
  std::map<std::string, int (*)(const Flags&)> handlers = {
      {"coreset-l2", run_coreset_l2},       {"coreset-lp", run_coreset_lp},
      {"coreset-ridge", run_coreset_ridge}, {"coreset-cluster", run_coreset_cluster},
      {"lowrank-matrix", run_lowrank_matrix}, {"lowrank-kernel", run_lowrank_kernel},
      {"lowrank-tensor", run_lowrank_tensor}, {"curt", run_curt},
      {"select-data", run_select_data},     {"bench-queries", run_bench_queries},
  };
  for (auto& [name, fn] : handlers) {
    auto* cmd = app.add_subcommand(name);
    add_common(cmd, flags[name], name != "bench-queries");
  }

  CLI11_PARSE(app, argc, argv);

  try {
    for (auto& [name, fn] : handlers) {
      if (app.got_subcommand(name)) return fn(flags[name]);
    }
  } catch (const ContractError& e) {
    std::cerr << "contract violation: " << e.what() << "\n";
    return 2;
  } catch (const ConvergenceError& e) {
    std::cerr << "no convergence: " << e.what() << " (residual " << e.residual() << ")\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
