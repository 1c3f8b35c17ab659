#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "spikelda/common.hpp"
#include "spikelda/dataio.hpp"
#include "spikelda/pclda.hpp"
#include "spikelda/rng.hpp"

namespace spikelda {

// Stratified fold assignment: per-class counts per fold differ by at most one,
// and the plan is a pure function of (labels, k, seed).
struct CVPlan {
  int k = 0;
  std::vector<int> fold_of;
  std::uint64_t seed = 0;

  std::vector<int> fold_indices(int fold) const {
    std::vector<int> out;
    for (std::size_t i = 0; i < fold_of.size(); ++i)
      if (fold_of[i] == fold) out.push_back(static_cast<int>(i));
    return out;
  }
  std::vector<int> complement_indices(int fold) const {
    std::vector<int> out;
    for (std::size_t i = 0; i < fold_of.size(); ++i)
      if (fold_of[i] != fold) out.push_back(static_cast<int>(i));
    return out;
  }
};

inline CVPlan kfold_stratified(const std::vector<std::string>& labels, int k,
                               std::uint64_t seed) {
  if (k < 2) throw RangeError("kfold_stratified: need k >= 2");
  std::map<std::string, std::vector<int>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i)
    by_class[labels[i]].push_back(static_cast<int>(i));
  CVPlan plan;
  plan.k = k;
  plan.seed = seed;
  plan.fold_of.assign(labels.size(), -1);
  Rng rng(seed);
  std::size_t class_ord = 0;
  for (auto& [name, idx] : by_class) {
    if (static_cast<int>(idx.size()) < k)
      throw InsufficientDataError("kfold_stratified: class '" + name +
                                  "' has fewer samples than folds");
    Rng r = rng.child(class_ord);
    r.shuffle(idx);
    // Deal round-robin; the starting fold rotates with the class ordinal so
    // fold totals stay balanced.
    for (std::size_t i = 0; i < idx.size(); ++i)
      plan.fold_of[static_cast<std::size_t>(idx[i])] =
          static_cast<int>((i + class_ord) % static_cast<std::size_t>(k));
    ++class_ord;
  }
  return plan;
}

inline CVPlan kfold_stratified(const LabeledDataset& ds, int k, std::uint64_t seed) {
  return kfold_stratified(ds.labels, k, seed);
}

struct CVSelectResult {
  int s_star = 0;
  std::vector<std::pair<int, double>> cv_errors;  // (candidate, mean fold error)
};

// Five-fold (or k-fold) selection of the sparsity level s. d is held fixed
// across folds; each fold refits the whitener once and sweeps all candidates
// over the same fitted direction. Ties go to the smallest s.
inline CVSelectResult cv_select_s(const LabeledDataset& train, int d,
                                  std::vector<int> candidates, int k,
                                  std::uint64_t seed) {
  if (candidates.empty()) throw RangeError("cv_select_s: empty candidate set");
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
  if (candidates.front() < 1 || candidates.back() > train.p())
    throw RangeError("cv_select_s: candidates must lie in [1, p]");
  const CVPlan plan = kfold_stratified(train, k, seed);

  const std::size_t nc = candidates.size();
  std::vector<double> err_sum(nc, 0.0);
  std::vector<int> fold_ok(nc, 0);
  for (int f = 0; f < k; ++f) {
    std::vector<int> tr = plan.complement_indices(f);
    std::vector<int> va = plan.fold_indices(f);
    try {
      LabeledDataset sub = train.subset(tr);
      KClassPCLDAModel m = fit_kclass(sub, DPolicy::fixed(d),
                                      SelectionMode::top_s(1));
      LabeledDataset val = train.subset(va);
      Matrix zt = m.whitener.apply_rows(val.features);
      // Candidate sweep shares the fitted direction; only the kept index set
      // changes.
      const int kk = m.k();
      std::vector<std::vector<IndexSet>> sel_by_cand(nc);
      for (std::size_t ci = 0; ci < nc; ++ci) {
        sel_by_cand[ci].resize(static_cast<std::size_t>(kk));
        for (int i = 1; i < kk; ++i)
          sel_by_cand[ci][static_cast<std::size_t>(i)] =
              select_top_s(m.zeta[i], candidates[ci]);
      }
      std::vector<Vector> mids(static_cast<std::size_t>(kk));
      for (int i = 1; i < kk; ++i)
        mids[static_cast<std::size_t>(i)] =
            0.5 * (m.whitened_means[i] + m.whitened_means[0]);
      for (std::size_t ci = 0; ci < nc; ++ci) {
        int wrong = 0;
        for (Index r = 0; r < val.n(); ++r) {
          int best = 0;
          double best_score = 0.0;
          for (int i = 1; i < kk; ++i) {
            const double sc = detail::discriminant_score(
                                  zt, r, mids[static_cast<std::size_t>(i)], m.zeta[i],
                                  sel_by_cand[ci][static_cast<std::size_t>(i)]) +
                              m.score_offsets[i];
            if (sc > best_score) {
              best = i;
              best_score = sc;
            }
          }
          if (best != val.label_ordinal[static_cast<std::size_t>(r)]) ++wrong;
        }
        err_sum[ci] += static_cast<double>(wrong) / static_cast<double>(val.n());
        fold_ok[ci] += 1;
      }
    } catch (const Error&) {
      // fold failed: every candidate is marked failed for this fold
    }
  }
  CVSelectResult out;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t ci = 0; ci < nc; ++ci) {
    if (fold_ok[ci] == 0) {
      out.cv_errors.emplace_back(candidates[ci], std::numeric_limits<double>::quiet_NaN());
      continue;
    }
    const double mean_err = err_sum[ci] / fold_ok[ci];
    out.cv_errors.emplace_back(candidates[ci], mean_err);
    if (mean_err < best) {  // strict: ties resolved to the smallest candidate
      best = mean_err;
      out.s_star = candidates[ci];
    }
  }
  if (!std::isfinite(best)) throw TuningError("cv_select_s: every fold failed");
  return out;
}

struct CVDeltaResult {
  double delta_star = 0.0;
  std::vector<std::pair<double, double>> cv_errors;
};

// Same skeleton for the NSC shrinkage level.
inline CVDeltaResult cv_select_nsc_delta(const LabeledDataset& train,
                                         std::vector<double> candidates, int k,
                                         std::uint64_t seed) {
  if (candidates.empty()) throw RangeError("cv_select_nsc_delta: empty candidate set");
  std::sort(candidates.begin(), candidates.end());
  const CVPlan plan = kfold_stratified(train, k, seed);
  std::vector<double> err_sum(candidates.size(), 0.0);
  std::vector<int> fold_ok(candidates.size(), 0);
  for (int f = 0; f < k; ++f) {
    std::vector<int> tr = plan.complement_indices(f);
    std::vector<int> va = plan.fold_indices(f);
    LabeledDataset sub = train.subset(tr);
    LabeledDataset val = train.subset(va);
    for (std::size_t ci = 0; ci < candidates.size(); ++ci) {
      try {
        NSCModel m = fit_nsc(sub, candidates[ci]);
        auto pred = predict_nsc_batch(m, val.features);
        int wrong = 0;
        for (Index r = 0; r < val.n(); ++r)
          if (pred[static_cast<std::size_t>(r)] !=
              val.label_ordinal[static_cast<std::size_t>(r)])
            ++wrong;
        err_sum[ci] += static_cast<double>(wrong) / static_cast<double>(val.n());
        fold_ok[ci] += 1;
      } catch (const Error&) {
      }
    }
  }
  CVDeltaResult out;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t ci = 0; ci < candidates.size(); ++ci) {
    if (fold_ok[ci] == 0) {
      out.cv_errors.emplace_back(candidates[ci], std::numeric_limits<double>::quiet_NaN());
      continue;
    }
    const double mean_err = err_sum[ci] / fold_ok[ci];
    out.cv_errors.emplace_back(candidates[ci], mean_err);
    if (mean_err < best) {
      best = mean_err;
      out.delta_star = candidates[ci];
    }
  }
  if (!std::isfinite(best)) throw TuningError("cv_select_nsc_delta: every fold failed");
  return out;
}

}  // namespace spikelda
