#pragma once

#include <cstddef>
#include <ostream>
#include <istream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace nckrm {

// Finite window of a two-sided impulse response: coefficients g(k) for
// -n_a <= k <= n_c, stored as coeffs[k + n_a].
struct NoncausalFir {
  std::vector<double> coeffs;
  int n_a = 0;  // anti-causal order
  int n_c = 0;  // causal order

  NoncausalFir() = default;
  NoncausalFir(int na, int nc)
      : coeffs(static_cast<std::size_t>(na + nc + 1), 0.0), n_a(na), n_c(nc) {
    if (na < 0 || nc < 0) throw std::invalid_argument("NoncausalFir: negative order");
  }

  int size() const { return n_a + n_c + 1; }

  double& at(int k) { return coeffs[static_cast<std::size_t>(check(k))]; }
  double at(int k) const { return coeffs[static_cast<std::size_t>(check(k))]; }

  // g(k) with zero extension outside the window.
  double tap(int k) const {
    if (k < -n_a || k > n_c) return 0.0;
    return coeffs[static_cast<std::size_t>(k + n_a)];
  }

  double l1_norm() const {
    double s = 0.0;
    for (double c : coeffs) s += c < 0 ? -c : c;
    return s;
  }

  void write_csv(std::ostream& os) const {
    os << "k,g\n";
    for (int k = -n_a; k <= n_c; ++k) {
      std::ostringstream row;
      row.precision(17);
      row << k << "," << at(k) << "\n";
      os << row.str();
    }
  }

  static NoncausalFir read_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line.rfind("k,g", 0) != 0)
      throw std::runtime_error("NoncausalFir: bad CSV header");
    std::vector<std::pair<int, double>> rows;
    while (std::getline(is, line)) {
      if (line.empty()) continue;
      auto comma = line.find(',');
      rows.emplace_back(std::stoi(line.substr(0, comma)),
                        std::stod(line.substr(comma + 1)));
    }
    if (rows.empty()) throw std::runtime_error("NoncausalFir: empty CSV");
    NoncausalFir fir(-rows.front().first, rows.back().first);
    for (auto& [k, g] : rows) fir.at(k) = g;
    return fir;
  }

 private:
  int check(int k) const {
    if (k < -n_a || k > n_c)
      throw std::out_of_range("NoncausalFir: tap index " + std::to_string(k) +
                              " outside [" + std::to_string(-n_a) + "," +
                              std::to_string(n_c) + "]");
    return k + n_a;
  }
};

}  // namespace nckrm
