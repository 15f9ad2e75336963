#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include <nlohmann/json.hpp>

#include <nckrm/bench.hpp>
#include <nckrm/estimator.hpp>
#include <nckrm/kernels.hpp>
#include <nckrm/semisep.hpp>

namespace {

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

int default_jobs() {
  if (const char* env = std::getenv("NCKRM_JOBS")) {
    int v = std::atoi(env);
    if (v > 0) return v;
  }
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

// Optional JSON config: top-level keys per subcommand; explicit flags win.
void apply_config(CLI::App* sub, const std::string& path) {
  if (path.empty()) return;
  nlohmann::json cfg =
      nlohmann::json::parse(nckrm::detail::read_text_file(path));
  auto section = cfg.find(sub->get_name());
  if (section == cfg.end()) return;
  for (auto& [key, value] : section->items()) {
    CLI::Option* opt = sub->get_option_no_throw("--" + key);
    if (opt == nullptr)
      throw CLI::ValidationError("config", "unknown config key: " + key);
    if (opt->count() > 0) continue;  // command-line flag wins
    std::string text = value.is_string() ? value.get<std::string>()
                                          : value.dump();
    opt->add_result(text);
    opt->run_callback();
  }
}

struct DatabankArgs {
  std::string id, out, config;
  int n = 50;
  int nmax = -1, na = -1, nc = -1;
  std::uint64_t seed = 0;
};

int cmd_databank(const DatabankArgs& a) {
  if (a.id.empty()) throw CLI::RequiredError("--id");
  if (a.out.empty()) throw CLI::RequiredError("--out");
  nckrm::DatabankId id = nckrm::databank_from_name(a.id);
  nckrm::DatabankConfig cfg = nckrm::default_databank_config(id);
  cfg.n_systems = a.n;
  cfg.seed = a.seed;
  if (a.nmax > 0) cfg.N_max = a.nmax;
  if (a.na >= 0) cfg.n_a = a.na;
  if (a.nc >= 0) cfg.n_c = a.nc;
  nckrm::make_databank(cfg, a.out);
  std::printf("databank %s: %d datasets, N_max=%d, n_a=%d, n_c=%d -> %s\n",
              a.id.c_str(), cfg.n_systems, cfg.N_max, cfg.n_a, cfg.n_c,
              a.out.c_str());
  return 0;
}

struct BenchmarkArgs {
  std::string bank, families = "nctc,ncsifo", out, config;
  std::string N_list;
  int runs = 50;
  int jobs = 0;
  std::uint64_t seed = 0;
};

int cmd_benchmark(const BenchmarkArgs& a) {
  if (a.bank.empty()) throw CLI::RequiredError("--bank");
  if (a.runs < 1) throw CLI::ValidationError("--runs", "must be positive");
  if (!std::filesystem::exists(std::filesystem::path(a.bank) /
                               "manifest.json"))
    throw CLI::ValidationError("--bank",
                               "no manifest.json under " + a.bank);
  nckrm::Databank bank = nckrm::load_databank(a.bank);
  std::vector<nckrm::KernelFamily> families;
  for (const auto& name : split_list(a.families))
    families.push_back(nckrm::kernel_family_from_name(name));
  std::vector<int> Ns;
  if (a.N_list.empty()) {
    Ns.push_back(bank.cfg.N_max);
  } else {
    for (const auto& tok : split_list(a.N_list)) Ns.push_back(std::stoi(tok));
  }
  nckrm::BenchmarkOptions opt;
  opt.mc_runs = a.runs;
  opt.seed = a.seed;
  opt.jobs = a.jobs > 0 ? a.jobs : default_jobs();
  opt.on_progress = [](int done, int total) {
    std::fprintf(stderr, "\r%d/%d runs", done, total);
    if (done == total) std::fprintf(stderr, "\n");
  };
  nckrm::BenchmarkResult res = nckrm::run_benchmark(bank, families, Ns, opt);
  std::string out_dir = a.out.empty() ? a.bank + "/results" : a.out;
  nckrm::write_benchmark_outputs(res, nckrm::databank_name(bank.cfg.id),
                                 out_dir);
  std::printf("%-12s %6s %14s %16s %6s\n", "family", "N", "FIT", "ERR",
              "runs");
  for (const auto& row : res.summary) {
    if (row.n_runs == 0) {
      std::printf("%-12s %6d %14s %16s %6d (all failed)\n",
                  nckrm::kernel_family_name(row.family), row.N, "-",
                  "-", 0);
      continue;
    }
    std::printf("%-12s %6d %8.2f(%5.2f) %9.3f(%5.3f) %6d\n",
                nckrm::kernel_family_name(row.family), row.N,
                row.fit.mean, row.fit.stddev, row.err.mean, row.err.stddev,
                row.n_runs);
  }
  if (!res.failures.empty())
    std::printf("%zu run(s) failed; see summary.json\n", res.failures.size());
  std::printf("results written to %s\n", out_dir.c_str());
  return 0;
}

struct KernelDumpArgs {
  std::string family, eta, out, config;
  int lo = -20, hi = 20;
};

int cmd_kernel_dump(const KernelDumpArgs& a) {
  if (a.family.empty()) throw CLI::RequiredError("--family");
  if (a.eta.empty()) throw CLI::RequiredError("--eta");
  nckrm::KernelFamily fam = nckrm::kernel_family_from_name(a.family);
  std::vector<double> eta;
  for (const auto& tok : split_list(a.eta)) eta.push_back(std::stod(tok));
  nckrm::KernelSpec spec(fam, eta);  // validates length and ranges
  if (a.lo > a.hi) throw CLI::ValidationError("--lo", "lo exceeds hi");
  std::ostringstream csv;
  csv << "t,s,k\n";
  char buf[64];
  for (int t = a.lo; t <= a.hi; ++t)
    for (int s = a.lo; s <= a.hi; ++s) {
      std::snprintf(buf, sizeof buf, "%d,%d,%.6g\n", t, s,
                    nckrm::eval(spec, t, s));
      csv << buf;
    }
  if (a.out.empty()) {
    std::fputs(csv.str().c_str(), stdout);
  } else {
    nckrm::detail::write_text_file(a.out, csv.str());
    std::printf("wrote %s\n", a.out.c_str());
  }
  return 0;
}

struct CholBenchArgs {
  std::string n_list = "1000,2000,4000,8000", out, config;
};

int cmd_chol_bench(const CholBenchArgs& a) {
  std::vector<int> ns;
  for (const auto& tok : split_list(a.n_list)) ns.push_back(std::stoi(tok));
  if (ns.empty()) throw CLI::ValidationError("--n", "empty size list");
  for (int n : ns)
    if (n < 2) throw CLI::ValidationError("--n", "sizes must be >= 2");
  // first-order kernel with dynamics mild enough that the generator
  // representation stays in range at the largest grid
  nckrm::NominalFoParams g0{0.95, -0.95, 1.0, 0.5, -0.8};
  nckrm::UncertaintyFoParams b{0.8, 0.8, 0.5, 0.5};
  std::ostringstream csv;
  csv << "n,method,seconds\n";
  char buf[64];
  for (int n : ns) {
    std::vector<int> grid(n);
    for (int i = 0; i < n; ++i) grid[i] = i - n / 2;
    nckrm::SemisepGenerators gen = nckrm::fo_generators(g0, b, grid);
    // strong ridge so both factorizations stay positive definite at the
    // largest sizes; the flop count being timed is unchanged
    gen.diag.array() += gen.diag.sum() / n;
    auto t0 = std::chrono::steady_clock::now();
    nckrm::structured_cholesky(gen);
    auto t1 = std::chrono::steady_clock::now();
    nckrm::dense_cholesky(nckrm::expand_dense(gen));
    auto t2 = std::chrono::steady_clock::now();
    double ts = std::chrono::duration<double>(t1 - t0).count();
    double td = std::chrono::duration<double>(t2 - t1).count();
    std::snprintf(buf, sizeof buf, "%d,structured,%.6g\n", n, ts);
    csv << buf;
    std::snprintf(buf, sizeof buf, "%d,dense,%.6g\n", n, td);
    csv << buf;
  }
  if (a.out.empty()) {
    std::fputs(csv.str().c_str(), stdout);
  } else {
    nckrm::detail::write_text_file(a.out, csv.str());
    std::printf("wrote %s\n", a.out.c_str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kernel-based regularized identification of non-causal LTI "
               "inverses"};
  app.require_subcommand(1);

  DatabankArgs da;
  CLI::App* databank = app.add_subcommand("databank", "generate a databank");
  databank->add_option("--id", da.id, "databank id: d1, d2, d3, d4");
  databank->add_option("--n", da.n, "number of datasets");
  databank->add_option("--nmax", da.nmax, "samples per dataset");
  databank->add_option("--na", da.na, "anticausal FIR order");
  databank->add_option("--nc", da.nc, "causal FIR order");
  databank->add_option("--seed", da.seed, "RNG seed");
  databank->add_option("--out", da.out, "output directory");
  databank->add_option("--config", da.config, "JSON config file");

  BenchmarkArgs ba;
  CLI::App* benchmark =
      app.add_subcommand("benchmark", "run a Monte-Carlo benchmark");
  benchmark->add_option("--bank", ba.bank, "databank directory");
  benchmark->add_option("--families", ba.families,
                        "comma-separated kernel families");
  benchmark->add_option("--N", ba.N_list,
                        "comma-separated data lengths (default: bank N_max)");
  benchmark->add_option("--runs", ba.runs, "Monte-Carlo runs per combination");
  benchmark->add_option("--seed", ba.seed, "RNG seed");
  benchmark->add_option("--jobs", ba.jobs, "worker threads");
  benchmark->add_option("--out", ba.out, "results directory");
  benchmark->add_option("--config", ba.config, "JSON config file");

  KernelDumpArgs ka;
  CLI::App* kernel_dump =
      app.add_subcommand("kernel-dump", "dump kernel values as t,s,k CSV");
  kernel_dump->add_option("--family", ka.family, "kernel family");
  kernel_dump->add_option("--eta", ka.eta, "comma-separated hyper-parameters");
  kernel_dump->add_option("--lo", ka.lo, "grid lower bound");
  kernel_dump->add_option("--hi", ka.hi, "grid upper bound");
  kernel_dump->add_option("--out", ka.out, "output file (default stdout)");
  kernel_dump->add_option("--config", ka.config, "JSON config file");

  CholBenchArgs ca;
  CLI::App* chol_bench = app.add_subcommand(
      "chol-bench", "time structured vs dense Cholesky, n,method,seconds CSV");
  chol_bench->add_option("--n", ca.n_list, "comma-separated matrix sizes");
  chol_bench->add_option("--out", ca.out, "output file (default stdout)");
  chol_bench->add_option("--config", ca.config, "JSON config file");

  try {
    app.parse(argc, argv);
    if (databank->parsed()) {
      apply_config(databank, da.config);
      return cmd_databank(da);
    }
    if (benchmark->parsed()) {
      apply_config(benchmark, ba.config);
      return cmd_benchmark(ba);
    }
    if (kernel_dump->parsed()) {
      apply_config(kernel_dump, ka.config);
      return cmd_kernel_dump(ka);
    }
    if (chol_bench->parsed()) {
      apply_config(chol_bench, ca.config);
      return cmd_chol_bench(ca);
    }
    return 2;
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
