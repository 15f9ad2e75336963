#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "nckrm/estimator.hpp"
#include "nckrm/inverse.hpp"
#include "nckrm/rational.hpp"
#include "nckrm/rng.hpp"
#include "nckrm/state_space.hpp"
#include "nckrm/systems.hpp"

namespace nckrm {

struct Dataset {
  std::vector<double> u, y;
  int N_max = 0;
  DiscreteRational system_ref;
  NoncausalFir true_inverse;
  double noise_sigma2 = 0.0;
  std::uint64_t seed = 0;
};

// Draws a unit white-noise target y0 on t = -n_c .. N_max + n_a, drives the
// plant with it (u = P y0, zero initial state), adds measurement noise with
// variance one tenth of the retained-window sample variance of y0, and keeps
// the slice t = 1 .. N_max.
inline Dataset simulate_dataset(const DiscreteRational& P, int N_max, int n_a,
                                int n_c, std::uint64_t seed) {
  if (N_max < 2) throw std::invalid_argument("simulate_dataset: N_max too small");
  Rng rng(seed);
  const int total = N_max + n_a + n_c + 1;  // t = -n_c .. N_max + n_a
  std::vector<double> y0(static_cast<std::size_t>(total));
  for (double& v : y0) v = rng.gauss();
  std::vector<double> u_full = simulate(P.to_state_space(), y0);

  // retained window t = 1 .. N_max sits at offsets n_c+1 .. n_c+N_max
  const int off = n_c + 1;
  double mean = 0.0;
  for (int t = 0; t < N_max; ++t) mean += y0[static_cast<std::size_t>(off + t)];
  mean /= N_max;
  double var = 0.0;
  for (int t = 0; t < N_max; ++t) {
    double d = y0[static_cast<std::size_t>(off + t)] - mean;
    var += d * d;
  }
  var /= (N_max - 1);

  Dataset ds;
  ds.N_max = N_max;
  ds.system_ref = P;
  ds.seed = seed;
  ds.noise_sigma2 = 0.1 * var;
  double noise_sd = std::sqrt(ds.noise_sigma2);
  ds.u.resize(static_cast<std::size_t>(N_max));
  ds.y.resize(static_cast<std::size_t>(N_max));
  for (int t = 0; t < N_max; ++t) {
    ds.u[static_cast<std::size_t>(t)] = u_full[static_cast<std::size_t>(off + t)];
    ds.y[static_cast<std::size_t>(t)] =
        y0[static_cast<std::size_t>(off + t)] + noise_sd * rng.gauss();
  }
  ds.true_inverse = noncausal_inverse_ir(P, n_a, n_c);
  return ds;
}

// FIT = 100 (1 - sqrt(sum (g0 - ghat)^2 / sum (g0 - mean(g0))^2)).
inline double fit_metric(const NoncausalFir& g_hat, const NoncausalFir& g_true) {
  if (g_hat.n_a != g_true.n_a || g_hat.n_c != g_true.n_c)
    throw std::invalid_argument("fit_metric: FIR windows differ");
  double mean = 0.0;
  for (double v : g_true.coeffs) mean += v;
  mean /= static_cast<double>(g_true.coeffs.size());
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < g_true.coeffs.size(); ++i) {
    double dn = g_true.coeffs[i] - g_hat.coeffs[i];
    double dd = g_true.coeffs[i] - mean;
    num += dn * dn;
    den += dd * dd;
  }
  if (den <= 0.0) throw std::runtime_error("FIT undefined: constant reference");
  return 100.0 * (1.0 - std::sqrt(num / den));
}

// Tracking error: a fresh white reference r is inverted through g_hat, pushed
// through the plant, and compared with r on t = 1 .. L. The reference starts
// early enough that the filter window never runs off the array and the
// plant's transient has decayed before scoring begins.
inline double err_metric(const NoncausalFir& g_hat, const DiscreteRational& P,
                         int L, std::uint64_t seed) {
  const int n_a = g_hat.n_a, n_c = g_hat.n_c;
  Rng rng(seed);
  const int r_lo = 1 - 2 * n_c - n_a;        // first reference time
  const int r_hi = L + n_a;                  // last reference time
  std::vector<double> r(static_cast<std::size_t>(r_hi - r_lo + 1));
  for (double& v : r) v = rng.gauss();

  const int w_lo = 1 - n_a - n_c;  // w(t) needs r(t - k), k in [-n_a, n_c]
  const int w_hi = L;
  std::vector<double> w(static_cast<std::size_t>(w_hi - w_lo + 1), 0.0);
  for (int t = w_lo; t <= w_hi; ++t) {
    double acc = 0.0;
    for (int k = -n_a; k <= n_c; ++k)
      acc += g_hat.at(k) * r[static_cast<std::size_t>(t - k - r_lo)];
    w[static_cast<std::size_t>(t - w_lo)] = acc;
  }
  std::vector<double> yw = simulate(P.to_state_space(), w);
  double acc = 0.0;
  for (int t = 1; t <= L; ++t) {
    double e = r[static_cast<std::size_t>(t - r_lo)] -
               yw[static_cast<std::size_t>(t - w_lo)];
    acc += e * e;
  }
  return std::sqrt(acc / L);
}

enum class DatabankId { kD1, kD2, kD3, kD4 };

inline std::string databank_name(DatabankId id) {
  switch (id) {
    case DatabankId::kD1: return "d1";
    case DatabankId::kD2: return "d2";
    case DatabankId::kD3: return "d3";
    case DatabankId::kD4: return "d4";
  }
  throw std::logic_error("databank_name: bad id");
}

inline DatabankId databank_from_name(const std::string& s) {
  if (s == "d1") return DatabankId::kD1;
  if (s == "d2") return DatabankId::kD2;
  if (s == "d3") return DatabankId::kD3;
  if (s == "d4") return DatabankId::kD4;
  throw std::invalid_argument("unknown databank id: " + s);
}

namespace detail {

inline std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline void write_text_file(const std::filesystem::path& path,
                            const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline DiscreteRational generate_system(DatabankId id, std::uint64_t seed) {
  switch (id) {
    case DatabankId::kD1: return d1_system();
    case DatabankId::kD2: return random_system_d2(seed);
    case DatabankId::kD3: return perturb_zeros_d3(random_system_d2(seed), seed);
    case DatabankId::kD4: return random_system_d4(seed);
  }
  throw std::logic_error("generate_system: bad id");
}

}  // namespace detail

struct DatabankConfig {
  DatabankId id = DatabankId::kD1;
  int n_systems = 50;
  int N_max = 2000;
  int n_a = 150;
  int n_c = 150;
  std::uint64_t seed = 0;
};

inline DatabankConfig default_databank_config(DatabankId id) {
  DatabankConfig cfg;
  cfg.id = id;
  if (id != DatabankId::kD1) {
    cfg.N_max = 700;
    cfg.n_a = cfg.n_c = 50;
  }
  return cfg;
}

// Writes manifest.json plus dsNNNN.json (plant) and dsNNNN.csv (t,u,y) per
// dataset. Regeneration with the same config is byte-identical.
inline void make_databank(const DatabankConfig& cfg,
                          const std::filesystem::path& dir) {
  if (cfg.n_systems < 1)
    throw std::invalid_argument("make_databank: n_systems must be positive");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec)
    throw std::runtime_error("cannot create directory " + dir.string() + ": " +
                             ec.message());
  nlohmann::json manifest;
  manifest["id"] = databank_name(cfg.id);
  manifest["seed"] = cfg.seed;
  manifest["n_systems"] = cfg.n_systems;
  manifest["N_max"] = cfg.N_max;
  manifest["n_a"] = cfg.n_a;
  manifest["n_c"] = cfg.n_c;
  nlohmann::json list = nlohmann::json::array();
  for (int i = 0; i < cfg.n_systems; ++i) {
    std::uint64_t sys_seed = Rng::derive(cfg.seed, 2 * i);
    std::uint64_t data_seed = Rng::derive(cfg.seed, 2 * i + 1);
    DiscreteRational P = detail::generate_system(cfg.id, sys_seed);
    Dataset ds = simulate_dataset(P, cfg.N_max, cfg.n_a, cfg.n_c, data_seed);

    char name[16];
    std::snprintf(name, sizeof name, "ds%04d", i);
    nlohmann::json sys_json;
    sys_json["system"] = to_json(P);
    sys_json["seed"] = data_seed;
    sys_json["system_seed"] = sys_seed;
    sys_json["noise_sigma2"] = ds.noise_sigma2;
    std::string sys_text = sys_json.dump(2) + "\n";
    detail::write_text_file(dir / (std::string(name) + ".json"), sys_text);

    std::ostringstream csv;
    csv << "t,u,y\n";
    char buf[96];
    for (int t = 0; t < cfg.N_max; ++t) {
      std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g\n", t + 1,
                    ds.u[static_cast<std::size_t>(t)],
                    ds.y[static_cast<std::size_t>(t)]);
      csv << buf;
    }
    detail::write_text_file(dir / (std::string(name) + ".csv"), csv.str());

    nlohmann::json entry;
    entry["index"] = i;
    entry["file"] = name;
    entry["seed"] = data_seed;
    entry["system_hash"] = detail::hex64(detail::fnv1a64(to_json(P).dump()));
    list.push_back(entry);
  }
  manifest["datasets"] = list;
  detail::write_text_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

struct Databank {
  DatabankConfig cfg;
  std::vector<Dataset> datasets;
};

inline Databank load_databank(const std::filesystem::path& dir) {
  nlohmann::json manifest =
      nlohmann::json::parse(detail::read_text_file(dir / "manifest.json"));
  Databank bank;
  bank.cfg.id = databank_from_name(manifest.at("id").get<std::string>());
  bank.cfg.seed = manifest.at("seed").get<std::uint64_t>();
  bank.cfg.n_systems = manifest.at("n_systems").get<int>();
  bank.cfg.N_max = manifest.at("N_max").get<int>();
  bank.cfg.n_a = manifest.at("n_a").get<int>();
  bank.cfg.n_c = manifest.at("n_c").get<int>();
  for (const auto& entry : manifest.at("datasets")) {
    std::string name = entry.at("file").get<std::string>();
    nlohmann::json sys_json =
        nlohmann::json::parse(detail::read_text_file(dir / (name + ".json")));
    Dataset ds;
    ds.system_ref = rational_from_json(sys_json.at("system"));
    ds.seed = sys_json.at("seed").get<std::uint64_t>();
    ds.noise_sigma2 = sys_json.at("noise_sigma2").get<double>();
    ds.N_max = bank.cfg.N_max;
    std::istringstream csv(detail::read_text_file(dir / (name + ".csv")));
    std::string line;
    std::getline(csv, line);  // header
    while (std::getline(csv, line)) {
      if (line.empty()) continue;
      std::size_t c1 = line.find(',');
      std::size_t c2 = line.find(',', c1 + 1);
      if (c1 == std::string::npos || c2 == std::string::npos)
        throw std::runtime_error("malformed csv row in " + name + ".csv");
      ds.u.push_back(std::stod(line.substr(c1 + 1, c2 - c1 - 1)));
      ds.y.push_back(std::stod(line.substr(c2 + 1)));
    }
    if (static_cast<int>(ds.u.size()) != bank.cfg.N_max)
      throw std::runtime_error("dataset length mismatch in " + name + ".csv");
    ds.true_inverse =
        noncausal_inverse_ir(ds.system_ref, bank.cfg.n_a, bank.cfg.n_c);
    bank.datasets.push_back(std::move(ds));
  }
  return bank;
}

struct BenchmarkRecord {
  std::string databank;
  KernelFamily family = KernelFamily::kNcTc;
  int N = 0;
  int run = 0;
  double fit = 0.0;
  double err = 0.0;
};

struct BoxStats {
  double mean = 0.0, stddev = 0.0;
  double median = 0.0, q1 = 0.0, q3 = 0.0;
  double whisker_lo = 0.0, whisker_hi = 0.0;
};

inline BoxStats box_stats(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("box_stats: empty sample");
  BoxStats s;
  double n = static_cast<double>(v.size());
  for (double x : v) s.mean += x;
  s.mean /= n;
  if (v.size() > 1) {
    double acc = 0.0;
    for (double x : v) acc += (x - s.mean) * (x - s.mean);
    s.stddev = std::sqrt(acc / (n - 1.0));
  }
  std::sort(v.begin(), v.end());
  auto quantile = [&](double p) {
    double pos = p * (n - 1.0);
    std::size_t lo = static_cast<std::size_t>(pos);
    std::size_t hi = std::min(lo + 1, v.size() - 1);
    double frac = pos - static_cast<double>(lo);
    return v[lo] * (1.0 - frac) + v[hi] * frac;
  };
  s.median = quantile(0.5);
  s.q1 = quantile(0.25);
  s.q3 = quantile(0.75);
  double iqr = s.q3 - s.q1;
  double lo_fence = s.q1 - 1.5 * iqr, hi_fence = s.q3 + 1.5 * iqr;
  s.whisker_lo = v.back();
  s.whisker_hi = v.front();
  for (double x : v) {
    if (x >= lo_fence && x < s.whisker_lo) s.whisker_lo = x;
    if (x <= hi_fence && x > s.whisker_hi) s.whisker_hi = x;
  }
  return s;
}

struct BenchmarkSummaryRow {
  KernelFamily family = KernelFamily::kNcTc;
  int N = 0;
  int n_runs = 0;
  int n_failures = 0;
  BoxStats fit, err;
};

struct BenchmarkFailure {
  KernelFamily family;
  int N = 0;
  int run = 0;
  std::string message;
};

struct BenchmarkResult {
  std::vector<BenchmarkRecord> records;
  std::vector<BenchmarkSummaryRow> summary;
  std::vector<BenchmarkFailure> failures;
};

struct BenchmarkOptions {
  int mc_runs = 50;
  std::uint64_t seed = 0;
  int jobs = 0;  // 0 = hardware concurrency
  int err_length = 1000;
  TuneOptions tune;
  std::function<void(int, int)> on_progress;  // (done, total)
};

// Runs identify + FIT/ERR for every (family, N, run) combination over the
// bank's datasets (run r uses dataset r mod bank size). Failures are logged
// and excluded from the summary.
inline BenchmarkResult run_benchmark(const Databank& bank,
                                     const std::vector<KernelFamily>& families,
                                     const std::vector<int>& N_values,
                                     const BenchmarkOptions& opt) {
  if (opt.mc_runs < 1)
    throw std::invalid_argument("run_benchmark: mc_runs must be positive");
  if (families.empty() || N_values.empty())
    throw std::invalid_argument("run_benchmark: nothing to run");
  if (bank.datasets.empty())
    throw std::invalid_argument("run_benchmark: empty databank");

  struct Task {
    KernelFamily family;
    int N = 0, run = 0;
    std::uint64_t idn_seed = 0, err_seed = 0;
  };
  std::vector<Task> tasks;
  std::uint64_t idx = 0;
  for (KernelFamily fam : families)
    for (int N : N_values)
      for (int run = 0; run < opt.mc_runs; ++run) {
        Task t;
        t.family = fam;
        t.N = N;
        t.run = run;
        t.idn_seed = Rng::derive(opt.seed, 2 * idx);
        t.err_seed = Rng::derive(opt.seed, 2 * idx + 1);
        tasks.push_back(t);
        ++idx;
      }
  for (int N : N_values)
    if (N < 1 || N > bank.cfg.N_max)
      throw std::invalid_argument("run_benchmark: N out of range: " +
                                  std::to_string(N));

  struct Slot {
    bool ok = false;
    double fit = 0.0, err = 0.0;
    std::string message;
  };
  std::vector<Slot> slots(tasks.size());
  std::atomic<std::size_t> next{0};
  std::atomic<int> done{0};
  std::mutex progress_mu;
  auto worker = [&]() {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      const Task& t = tasks[i];
      const Dataset& ds =
          bank.datasets[static_cast<std::size_t>(t.run) % bank.datasets.size()];
      try {
        std::vector<double> u(ds.u.begin(), ds.u.begin() + t.N);
        std::vector<double> y(ds.y.begin(), ds.y.begin() + t.N);
        EstimationResult est = identify(u, y, t.family, bank.cfg.n_a,
                                        bank.cfg.n_c, t.idn_seed, opt.tune);
        slots[i].fit = fit_metric(est.theta_hat, ds.true_inverse);
        slots[i].err = err_metric(est.theta_hat, ds.system_ref, opt.err_length,
                                  t.err_seed);
        slots[i].ok = true;
      } catch (const std::exception& e) {
        slots[i].message = e.what();
      }
      int d = ++done;
      if (opt.on_progress) {
        std::lock_guard<std::mutex> lock(progress_mu);
        opt.on_progress(d, static_cast<int>(tasks.size()));
      }
    }
  };
  int jobs = opt.jobs > 0 ? opt.jobs
                          : std::max(1u, std::thread::hardware_concurrency());
  jobs = std::min<int>(jobs, static_cast<int>(tasks.size()));
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  BenchmarkResult out;
  std::string bank_name = databank_name(bank.cfg.id);
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const Task& t = tasks[i];
    if (slots[i].ok) {
      out.records.push_back(
          {bank_name, t.family, t.N, t.run, slots[i].fit, slots[i].err});
    } else {
      out.failures.push_back({t.family, t.N, t.run, slots[i].message});
    }
  }
  for (KernelFamily fam : families)
    for (int N : N_values) {
      BenchmarkSummaryRow row;
      row.family = fam;
      row.N = N;
      std::vector<double> fits, errs;
      for (const auto& r : out.records)
        if (r.family == fam && r.N == N) {
          fits.push_back(r.fit);
          errs.push_back(r.err);
        }
      for (const auto& f : out.failures)
        if (f.family == fam && f.N == N) ++row.n_failures;
      row.n_runs = static_cast<int>(fits.size());
      if (!fits.empty()) {
        row.fit = box_stats(fits);
        row.err = box_stats(errs);
      }
      out.summary.push_back(row);
    }
  return out;
}

inline nlohmann::json box_stats_json(const BoxStats& s) {
  return {{"mean", s.mean},       {"std", s.stddev},
          {"median", s.median},   {"q1", s.q1},
          {"q3", s.q3},           {"whisker_lo", s.whisker_lo},
          {"whisker_hi", s.whisker_hi}};
}

inline void write_benchmark_outputs(const BenchmarkResult& res,
                                    const std::string& bank_name,
                                    const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec)
    throw std::runtime_error("cannot create directory " + dir.string() + ": " +
                             ec.message());
  std::ostringstream csv;
  csv << "databank,family,N,run,fit,err\n";
  char buf[128];
  for (const auto& r : res.records) {
    std::snprintf(buf, sizeof buf, "%s,%s,%d,%d,%.6g,%.6g\n",
                  r.databank.c_str(), kernel_family_name(r.family), r.N, r.run,
                  r.fit, r.err);
    csv << buf;
  }
  detail::write_text_file(dir / "records.csv", csv.str());

  nlohmann::json j;
  j["databank"] = bank_name;
  j["n_failures"] = static_cast<int>(res.failures.size());
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : res.summary) {
    nlohmann::json r;
    r["family"] = kernel_family_name(row.family);
    r["N"] = row.N;
    r["n_runs"] = row.n_runs;
    r["n_failures"] = row.n_failures;
    if (row.n_runs > 0) {
      r["fit"] = box_stats_json(row.fit);
      r["err"] = box_stats_json(row.err);
    }
    rows.push_back(r);
  }
  j["summary"] = rows;
  nlohmann::json fails = nlohmann::json::array();
  for (const auto& f : res.failures)
    fails.push_back({{"family", kernel_family_name(f.family)},
                     {"N", f.N},
                     {"run", f.run},
                     {"message", f.message}});
  j["failures"] = fails;
  detail::write_text_file(dir / "summary.json", j.dump(2) + "\n");
}

}  // namespace nckrm
