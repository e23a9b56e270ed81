#ifndef DPMOM_METRICS_HPP
#define DPMOM_METRICS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "dpmom/core.hpp"
#include "dpmom/csvio.hpp"
#include "dpmom/error.hpp"

namespace dpmom {

namespace detail {

// regularized upper incomplete gamma Q(a, x); series for x < a+1,
// Lentz continued fraction otherwise
inline double gamma_q(double a, double x) {
  check_contract(a > 0.0 && x >= 0.0, "gamma_q: domain error");
  if (x == 0.0) return 1.0;
  const double log_prefix = -x + a * std::log(x) - std::lgamma(a);
  if (x < a + 1.0) {
    double term = 1.0 / a;
    double sum = term;
    double ap = a;
    for (int i = 0; i < 1000; ++i) {
      ap += 1.0;
      term *= x / ap;
      sum += term;
      if (std::abs(term) < std::abs(sum) * 1e-16) break;
    }
    return 1.0 - sum * std::exp(log_prefix);
  }
  double b = x + 1.0 - a;
  double c = 1e300;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 1000; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < 1e-300) d = 1e-300;
    c = b + an / c;
    if (std::abs(c) < 1e-300) c = 1e-300;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < 1e-16) break;
  }
  return std::exp(log_prefix) * h;
}

inline double chi_square_sf(double stat, std::size_t dof) {
  return gamma_q(static_cast<double>(dof) / 2.0, stat / 2.0);
}

inline double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

// average ranks, rank 1 for the LARGEST value (ties share the mean rank)
inline std::vector<double> average_ranks_desc(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(),
            [&](std::size_t a, std::size_t b) { return v[a] > v[b]; });
  std::vector<double> ranks(v.size(), 0.0);
  std::size_t i = 0;
  while (i < idx.size()) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double shared = (static_cast<double>(i + j)) / 2.0 + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[idx[t]] = shared;
    i = j + 1;
  }
  return ranks;
}

// average ranks of |values|, rank 1 for the smallest magnitude
inline std::vector<double> magnitude_ranks(const std::vector<double>& v) {
  std::vector<double> neg_abs(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) neg_abs[i] = -std::abs(v[i]);
  return average_ranks_desc(neg_abs);
}

inline double exact_binomial_choose(std::size_t n, std::size_t r) {
  // exact in double for n <= 60
  double c = 1.0;
  for (std::size_t i = 0; i < r; ++i) {
    c = c * static_cast<double>(n - i) / static_cast<double>(i + 1);
  }
  return c;
}

}  // namespace detail

struct TestResult {
  double statistic;
  double p_value;
};

// Adjusted Rand Index (chance-corrected pair counting). 1 for identical
// partitions up to relabeling. When the correction denominator vanishes the
// convention is: 1 if the partitions are equal, 0 otherwise.
inline double ari(const Assignment& a, const Assignment& b) {
  check_contract(a.size() == b.size(), "ari: length mismatch");
  check_contract(a.size() >= 2, "ari: need at least two observations");
  const std::size_t n = a.size();

  std::map<std::uint32_t, std::size_t> map_a, map_b;
  for (std::uint32_t l : a) map_a.emplace(l, map_a.size());
  for (std::uint32_t l : b) map_b.emplace(l, map_b.size());
  const std::size_t ka = map_a.size();
  const std::size_t kb = map_b.size();

  std::vector<double> cont(ka * kb, 0.0);
  std::vector<double> row_sum(ka, 0.0), col_sum(kb, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t ia = map_a.at(a[i]);
    const std::size_t ib = map_b.at(b[i]);
    cont[ia * kb + ib] += 1.0;
    row_sum[ia] += 1.0;
    col_sum[ib] += 1.0;
  }

  auto comb2 = [](double m) { return m * (m - 1.0) / 2.0; };
  double sum_cells = 0.0;
  for (double c : cont) sum_cells += comb2(c);
  double sum_rows = 0.0;
  for (double r : row_sum) sum_rows += comb2(r);
  double sum_cols = 0.0;
  for (double c : col_sum) sum_cols += comb2(c);

  const double pairs = comb2(static_cast<double>(n));
  const double expected = sum_rows * sum_cols / pairs;
  const double max_index = 0.5 * (sum_rows + sum_cols);
  const double denom = max_index - expected;
  if (denom == 0.0) {
    // equal partitions have exactly one nonzero cell per row and per column
    std::vector<std::size_t> row_nz(ka, 0), col_nz(kb, 0);
    for (std::size_t r = 0; r < ka; ++r) {
      for (std::size_t c = 0; c < kb; ++c) {
        if (cont[r * kb + c] > 0.0) {
          ++row_nz[r];
          ++col_nz[c];
        }
      }
    }
    const bool equal =
        ka == kb &&
        std::all_of(row_nz.begin(), row_nz.end(),
                    [](std::size_t m) { return m == 1; }) &&
        std::all_of(col_nz.begin(), col_nz.end(),
                    [](std::size_t m) { return m == 1; });
    return equal ? 1.0 : 0.0;
  }
  return (sum_cells - expected) / denom;
}

// algorithms are rows, datasets are columns, all entries in [-1, 1]
struct AriTable {
  std::vector<std::string> algorithms;
  std::vector<std::string> datasets;
  std::vector<std::vector<double>> values;  // [algorithm][dataset]

  void validate() const {
    check_contract(values.size() == algorithms.size(),
                   "AriTable: row count mismatch");
    for (const auto& row : values) {
      check_contract(row.size() == datasets.size(),
                     "AriTable: column count mismatch");
      for (double v : row) {
        check_contract(v >= -1.0 && v <= 1.0,
                       "AriTable: ARI outside [-1, 1]");
      }
    }
  }

  [[nodiscard]] std::size_t algo_index(const std::string& name) const {
    for (std::size_t i = 0; i < algorithms.size(); ++i) {
      if (algorithms[i] == name) return i;
    }
    throw Error(ErrorCode::ContractViolation,
                "AriTable: unknown algorithm " + name);
  }

  [[nodiscard]] AriTable without(const std::vector<std::string>& drop) const {
    AriTable out;
    out.datasets = datasets;
    for (std::size_t i = 0; i < algorithms.size(); ++i) {
      if (std::find(drop.begin(), drop.end(), algorithms[i]) != drop.end())
        continue;
      out.algorithms.push_back(algorithms[i]);
      out.values.push_back(values[i]);
    }
    return out;
  }
};

// header row = dataset names, first column = algorithm names
inline AriTable load_ari_table(const std::string& path) {
  const auto rows = read_csv_rows(path);
  check(rows.size() >= 2, ErrorCode::ParseError,
        "AriTable: need a header and at least one algorithm row: " + path);
  AriTable table;
  const auto& header = rows.front().cells;
  check(header.size() >= 2, ErrorCode::ParseError,
        "AriTable: header needs at least one dataset column");
  table.datasets.assign(header.begin() + 1, header.end());
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& cells = rows[r].cells;
    check(cells.size() == header.size(), ErrorCode::ParseError,
          "AriTable: row " + std::to_string(rows[r].line_number) +
              " has wrong cell count");
    table.algorithms.push_back(cells.front());
    std::vector<double> vals;
    for (std::size_t c = 1; c < cells.size(); ++c) {
      double v = 0.0;
      check(parse_double(cells[c], v), ErrorCode::ParseError,
            "AriTable: non-numeric cell at line " +
                std::to_string(rows[r].line_number));
      vals.push_back(v);
    }
    table.values.push_back(std::move(vals));
  }
  table.validate();
  return table;
}

inline void save_ari_table(const AriTable& table, const std::string& path) {
  std::ofstream out(path);
  check(out.good(), ErrorCode::IoError, "cannot write file: " + path);
  out << "algorithm";
  for (const auto& d : table.datasets) out << ',' << d;
  out << '\n';
  for (std::size_t i = 0; i < table.algorithms.size(); ++i) {
    out << table.algorithms[i];
    for (double v : table.values[i]) out << ',' << format_double(v);
    out << '\n';
  }
}

// mean rank per algorithm across datasets (rank 1 = best ARI on a dataset)
inline std::vector<double> average_ranks(const AriTable& table) {
  table.validate();
  const std::size_t k = table.algorithms.size();
  const std::size_t n = table.datasets.size();
  std::vector<double> mean_rank(k, 0.0);
  for (std::size_t d = 0; d < n; ++d) {
    std::vector<double> column(k);
    for (std::size_t j = 0; j < k; ++j) column[j] = table.values[j][d];
    const auto ranks = detail::average_ranks_desc(column);
    for (std::size_t j = 0; j < k; ++j) mean_rank[j] += ranks[j];
  }
  for (double& r : mean_rank) r /= static_cast<double>(n);
  return mean_rank;
}

// Classic Friedman chi-square over per-dataset average ranks; the p-value is
// the chi-square upper tail with (algorithms - 1) degrees of freedom.
inline TestResult friedman_test(const AriTable& table) {
  table.validate();
  const std::size_t k = table.algorithms.size();
  const std::size_t n = table.datasets.size();
  check_contract(k >= 2, "friedman_test: need at least two algorithms");
  check_contract(n >= 2, "friedman_test: need at least two datasets");

  std::vector<double> rank_sum(k, 0.0);
  for (std::size_t d = 0; d < n; ++d) {
    std::vector<double> column(k);
    for (std::size_t j = 0; j < k; ++j) column[j] = table.values[j][d];
    const auto ranks = detail::average_ranks_desc(column);
    for (std::size_t j = 0; j < k; ++j) rank_sum[j] += ranks[j];
  }

  const double kd = static_cast<double>(k);
  const double nd = static_cast<double>(n);
  double deviation = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    const double diff = rank_sum[j] / nd - (kd + 1.0) / 2.0;
    deviation += diff * diff;
  }
  const double statistic = 12.0 * nd / (kd * (kd + 1.0)) * deviation;
  return {statistic, detail::chi_square_sf(statistic, k - 1)};
}

// One-sided exact binomial test: statistic = wins, p = P(Bin(trials, 1/2) >= wins)
inline TestResult sign_test(std::size_t wins, std::size_t trials) {
  check_contract(trials >= 1, "sign_test: need at least one trial");
  check_contract(wins <= trials, "sign_test: wins cannot exceed trials");
  double p = 0.0;
  if (trials <= 60) {
    // binomial coefficients are exact in double up to n = 60
    const double scale = std::pow(0.5, static_cast<double>(trials));
    for (std::size_t i = wins; i <= trials; ++i) {
      p += detail::exact_binomial_choose(trials, i) * scale;
    }
  } else {
    const double lg2 = std::log(2.0);
    for (std::size_t i = wins; i <= trials; ++i) {
      p += std::exp(std::lgamma(static_cast<double>(trials) + 1.0) -
                    std::lgamma(static_cast<double>(i) + 1.0) -
                    std::lgamma(static_cast<double>(trials - i) + 1.0) -
                    static_cast<double>(trials) * lg2);
    }
    p = std::min(p, 1.0);
  }
  return {static_cast<double>(wins), p};
}

// One-sided Wilcoxon signed-rank test. Zero differences are dropped before
// ranking; |d| ties share average ranks. W is the sum of ranks of positive
// differences and p = P(W' >= W) under random signs: exact over the full
// signed-rank distribution for n <= 20, a tie-corrected normal tail with
// continuity correction beyond that.
inline TestResult wilcoxon_signed_rank(const std::vector<double>& differences) {
  check_contract(!differences.empty(), "wilcoxon_signed_rank: empty input");
  std::vector<double> d;
  for (double v : differences) {
    if (v != 0.0) d.push_back(v);
  }
  check(!d.empty(), ErrorCode::NoEvidence,
        "wilcoxon_signed_rank: all differences are zero");
  const std::size_t n = d.size();
  const auto ranks = detail::magnitude_ranks(d);

  double w = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (d[i] > 0.0) w += ranks[i];
  }

  if (n <= 20) {
    // doubled ranks are integers even with average-rank ties
    std::vector<std::size_t> r2(n);
    std::size_t total2 = 0;
    for (std::size_t i = 0; i < n; ++i) {
      r2[i] = static_cast<std::size_t>(std::llround(2.0 * ranks[i]));
      total2 += r2[i];
    }
    std::vector<double> count(total2 + 1, 0.0);
    count[0] = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t s = total2; s + 1 >= r2[i] + 1; --s) {
        count[s] += count[s - r2[i]];
      }
    }
    const auto w2 = static_cast<std::size_t>(std::llround(2.0 * w));
    double tail = 0.0;
    for (std::size_t s = w2; s <= total2; ++s) tail += count[s];
    return {w, tail / std::pow(2.0, static_cast<double>(n))};
  }

  const double nd = static_cast<double>(n);
  const double mean = nd * (nd + 1.0) / 4.0;
  double tie_adjust = 0.0;
  {
    std::vector<double> mags(n);
    for (std::size_t i = 0; i < n; ++i) mags[i] = std::abs(d[i]);
    std::sort(mags.begin(), mags.end());
    std::size_t i = 0;
    while (i < n) {
      std::size_t j = i;
      while (j + 1 < n && mags[j + 1] == mags[i]) ++j;
      const double t = static_cast<double>(j - i + 1);
      tie_adjust += t * t * t - t;
      i = j + 1;
    }
  }
  const double variance =
      nd * (nd + 1.0) * (2.0 * nd + 1.0) / 24.0 - tie_adjust / 48.0;
  const double z = (w - mean - 0.5) / std::sqrt(variance);
  return {w, detail::normal_sf(z)};
}

}  // namespace dpmom

#endif  // DPMOM_METRICS_HPP
