#include "mllc/selection.hpp"

#include "mllc/errors.hpp"
#include "mllc/random.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <limits>
#include <numeric>
#include <thread>

namespace mllc {

double bic(double loglik, int n_params, double n) {
  return -2.0 * loglik + static_cast<double>(n_params) * std::log(n);
}

const char* to_string(BicSampleSize n) {
  return n == BicSampleSize::level1_units ? "level1_units" : "level2_groups";
}

int worker_threads() {
  int n = static_cast<int>(std::thread::hardware_concurrency());
  if (n < 1) n = 1;
  if (const char* env = std::getenv("MLLC_THREADS")) {
    const int cap = std::atoi(env);
    if (cap >= 1) n = std::min(n, cap);
  }
  return n;
}

std::uint64_t start_seed(std::uint64_t seed, int start) {
  return derive_seed(seed, {0x5EED, static_cast<std::uint64_t>(start)});
}

namespace {

/// Runs task(0..count-1) on up to worker_threads() threads. Each task writes
/// only its own slot, so results do not depend on scheduling.
void parallel_for(int count, const std::function<void(int)>& task) {
  const int threads = std::min(worker_threads(), count);
  if (threads <= 1) {
    for (int i = 0; i < count; ++i) task(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (int i = next++; i < count; i = next++) task(i);
    });
  for (auto& th : pool) th.join();
}

}  // namespace

MultiStartResult multi_start_fit(const TwoLevelDataset& data, int clusters, int classes, int starts,
                                 std::uint64_t seed, const CodedDesign* design, EmConfig em) {
  if (starts < 1) throw InputError("starts must be >= 1");
  std::vector<std::optional<MllcFit>> fits(static_cast<std::size_t>(starts));
  MultiStartResult out;
  out.start_errors.assign(static_cast<std::size_t>(starts), {});
  out.start_logliks.assign(static_cast<std::size_t>(starts), std::numeric_limits<double>::quiet_NaN());

  // Input errors are identical across starts; surface them before spawning.
  const FlatData flat = flatten(data);
  if (classes > flat.num_groups() || clusters > flat.num_units() || clusters < 1 || classes < 1) {
    EmConfig probe = em;
    probe.seed = start_seed(seed, 0);
    probe.max_iter = 0;
    mllc_em_fit(data, clusters, classes, design, probe);
  }

  parallel_for(starts, [&](int s) {
    EmConfig cfg = em;
    cfg.seed = start_seed(seed, s);
    try {
      fits[static_cast<std::size_t>(s)] = mllc_em_fit(data, clusters, classes, design, cfg);
    } catch (const std::exception& e) {
      out.start_errors[static_cast<std::size_t>(s)] = e.what();
    }
  });

  for (int s = 0; s < starts; ++s) {
    const auto& f = fits[static_cast<std::size_t>(s)];
    if (!f) continue;
    ++out.successful_starts;
    out.converged_starts += f->converged ? 1 : 0;
    out.start_logliks[static_cast<std::size_t>(s)] = f->loglik;
    if (out.best_start < 0 || f->loglik > out.best.loglik) {
      out.best_start = s;
      out.best = *f;
    }
  }
  if (out.best_start < 0) {
    const auto& first = out.start_errors.front();
    if (first.find("non-finite") != std::string::npos) throw NumericalError("all starts failed: " + first);
    throw InputError("all starts failed: " + first);
  }
  return out;
}

void GridSpec::validate() const {
  if (clusters_min < 1 || clusters_max < clusters_min) throw InputError("invalid cluster range");
  if (classes_min < 1 || classes_max < classes_min) throw InputError("invalid class range");
  if (starts < 1) throw InputError("starts must be >= 1");
}

GridResult grid_search(const TwoLevelDataset& data, const GridSpec& grid, const CodedDesign* design) {
  grid.validate();
  GridResult out;
  out.bic_n = grid.bic_n;
  out.bic_sample_size = grid.bic_n == BicSampleSize::level1_units ? data.num_units() : data.num_groups();

  std::vector<std::pair<int, int>> cells;
  for (int l = grid.clusters_min; l <= grid.clusters_max; ++l)
    for (int h = grid.classes_min; h <= grid.classes_max; ++h) cells.emplace_back(l, h);

  std::optional<MllcFit> best;
  double best_bic = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < cells.size(); ++c) {
    const auto [l, h] = cells[c];
    GridRow row;
    row.clusters = l;
    row.classes = h;
    try {
      // Each cell gets its own seed stream keyed by (L, H).
      const auto cell_seed = derive_seed(grid.seed, {static_cast<std::uint64_t>(l), static_cast<std::uint64_t>(h)});
      auto ms = multi_start_fit(data, l, h, grid.starts, cell_seed, design, grid.em);
      row.ok = true;
      row.loglik = ms.best.loglik;
      row.n_params = ms.best.n_params;
      row.bic = bic(row.loglik, row.n_params, out.bic_sample_size);
      row.converged_share = static_cast<double>(ms.converged_starts) / grid.starts;
      if (!best || row.bic < best_bic) {
        best_bic = row.bic;
        best = std::move(ms.best);
      }
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    out.rows.push_back(row);
  }

  for (std::size_t c = 0; c < out.rows.size(); ++c)
    if (out.rows[c].ok) out.ranking.push_back(static_cast<int>(c));
  if (out.ranking.empty()) throw NumericalError("every grid cell failed");
  std::stable_sort(out.ranking.begin(), out.ranking.end(),
                   [&](int a, int b) { return out.rows[static_cast<std::size_t>(a)].bic < out.rows[static_cast<std::size_t>(b)].bic; });
  out.selected = out.ranking.front();
  out.selected_fit = std::move(*best);
  return out;
}

}  // namespace mllc
