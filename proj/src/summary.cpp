#include "embnoise/summary.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <tuple>

namespace embnoise {

std::vector<SummaryRow> summarize(std::vector<TrialResult> results, std::size_t expected_seeds) {
  canonical_sort(results);
  std::vector<SummaryRow> rows;
  for (std::size_t i = 0; i < results.size();) {
    std::size_t j = i;
    const auto& head = results[i];
    while (j < results.size() && results[j].dataset == head.dataset && results[j].method == head.method &&
           results[j].noise == head.noise && results[j].eta == head.eta) {
      ++j;
    }
    SummaryRow row{head.dataset, head.method, head.noise, head.eta};
    double sum = 0.0;
    for (std::size_t t = i; t < j; ++t) {
      if (results[t].status == TrialStatus::Ok) {
        ++row.n_ok;
        sum += results[t].test_accuracy;
      } else {
        ++row.n_failed;
      }
    }
    if (row.n_ok > 0) row.mean = sum / static_cast<double>(row.n_ok);
    if (row.n_ok > 1) {
      double ss = 0.0;
      for (std::size_t t = i; t < j; ++t) {
        if (results[t].status != TrialStatus::Ok) continue;
        const double dev = results[t].test_accuracy - row.mean;
        ss += dev * dev;
      }
      row.std = std::sqrt(ss / static_cast<double>(row.n_ok - 1));
    }
    row.single_seed = row.n_ok == 1;
    row.incomplete = row.n_failed > 0 || row.n_ok == 0 || (expected_seeds > 0 && row.n_ok + row.n_failed < expected_seeds);
    rows.push_back(std::move(row));
    i = j;
  }
  return rows;
}

std::string format_summary_csv(const std::vector<SummaryRow>& rows) {
  std::string out = "dataset,method,noise,eta,n,mean_acc,std_acc,failed,incomplete\n";
  for (const auto& r : rows) {
    out += r.dataset + ',' + r.method + ',' + r.noise + ',' + format_double(r.eta) + ',' + std::to_string(r.n_ok) + ',' +
           format_double(r.mean) + ',' + format_double(r.std) + ',' + std::to_string(r.n_failed) + ',' +
           (r.incomplete ? "1" : "0") + '\n';
  }
  return out;
}

namespace {

std::string percent_cell(const SummaryRow& r) {
  if (r.n_ok == 0) return "n/a*";
  char buf[64];
  // Round half up on the percent value; the nudge absorbs binary representation
  // error so that 0.9465 prints as 94.7.
  const auto round1 = [](double pct) { return std::floor(pct * 10.0 + 0.5 + 1e-7) / 10.0; };
  std::snprintf(buf, sizeof buf, "%.1f ± %.1f", round1(100.0 * r.mean), round1(100.0 * r.std));
  std::string cell = buf;
  if (r.single_seed) cell += " †";
  if (r.incomplete) cell += " *";
  return cell;
}

std::string pad(const std::string& s, std::size_t width) {
  // "±" and "†" are multi-byte; count code points for alignment.
  std::size_t glyphs = 0;
  for (unsigned char c : s) glyphs += (c & 0xC0) != 0x80;
  return s + std::string(width > glyphs ? width - glyphs : 0, ' ');
}

}  // namespace

std::string format_summary_table(const std::vector<SummaryRow>& rows) {
  std::map<std::pair<std::string, std::string>, std::vector<const SummaryRow*>> groups;  // (dataset, noise)
  for (const auto& r : rows) groups[{r.dataset, r.noise}].push_back(&r);

  std::string out;
  bool any_single = false, any_incomplete = false;
  for (const auto& [group, members] : groups) {
    std::set<double> etas;
    for (const auto* r : members) etas.insert(r->eta);
    out += "# " + group.first + " / " + group.second + " (test accuracy %, mean ± std over seeds)\n";
    std::size_t method_width = 6;
    for (const auto* r : members) method_width = std::max(method_width, r->method.size());
    constexpr std::size_t kCell = 16;
    out += pad("method", method_width + 2);
    for (double eta : etas) out += pad("eta=" + format_double(eta), kCell);
    out += '\n';

    std::map<std::string, std::map<double, const SummaryRow*>> table;
    for (const auto* r : members) table[r->method][r->eta] = r;
    for (const auto& [method, cells] : table) {
      out += pad(method, method_width + 2);
      for (double eta : etas) {
        auto it = cells.find(eta);
        out += pad(it == cells.end() ? "-" : percent_cell(*it->second), kCell);
        if (it != cells.end()) {
          any_single |= it->second->single_seed;
          any_incomplete |= it->second->incomplete;
        }
      }
      out += '\n';
    }
    out += '\n';
  }
  if (any_single) out += "† single seed: standard deviation reported as 0\n";
  if (any_incomplete) out += "* incomplete cell: failed or missing trials excluded from the mean\n";
  return out;
}

std::vector<CurvePoint> curve_export(const std::vector<TrialResult>& results) {
  std::vector<CurvePoint> points;
  for (const auto& row : summarize(results)) {
    if (row.n_ok == 0) continue;
    points.push_back({row.method, row.eta, row.mean, row.std, row.dataset, row.noise});
  }
  std::sort(points.begin(), points.end(), [](const CurvePoint& a, const CurvePoint& b) {
    return std::tie(a.method, a.eta, a.dataset, a.noise) < std::tie(b.method, b.eta, b.dataset, b.noise);
  });
  return points;
}

std::string format_curves_csv(const std::vector<CurvePoint>& points) {
  std::string out = "method,eta,mean_acc,std_acc,dataset,noise\n";
  for (const auto& p : points) {
    out += p.method + ',' + format_double(p.eta) + ',' + format_double(p.mean_acc) + ',' + format_double(p.std_acc) +
           ',' + p.dataset + ',' + p.noise + '\n';
  }
  return out;
}

}  // namespace embnoise
