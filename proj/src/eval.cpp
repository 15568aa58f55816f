#include "mltm/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

namespace mltm {

Pivot pivot_from_string(const std::string& s) {
  if (s == "document") return Pivot::document;
  if (s == "label") return Pivot::label;
  throw ConfigError("unknown pivot: " + s);
}

CutoffMethod cutoff_from_string(const std::string& s) {
  if (s == "proportional") return CutoffMethod::proportional;
  if (s == "calibrated") return CutoffMethod::calibrated;
  if (s == "bep") return CutoffMethod::bep;
  throw ConfigError("unknown cutoff method: " + s);
}

const char* pivot_name(Pivot p) { return p == Pivot::document ? "document" : "label"; }

const char* cutoff_name(CutoffMethod m) {
  switch (m) {
    case CutoffMethod::proportional: return "proportional";
    case CutoffMethod::calibrated: return "calibrated";
    case CutoffMethod::bep: return "bep";
  }
  return "?";
}

Ranking make_ranking(const Eigen::Ref<const Eigen::VectorXd>& scores,
                     const std::vector<std::uint8_t>& relevant) {
  if (static_cast<std::size_t>(scores.size()) != relevant.size())
    throw NumericError("make_ranking: size mismatch");
  Ranking r;
  r.relevant = relevant;
  r.order.resize(scores.size());
  std::iota(r.order.begin(), r.order.end(), 0);
  std::sort(r.order.begin(), r.order.end(), [&](std::int32_t a, std::int32_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  });
  for (auto flag : relevant) r.n_relevant += flag ? 1 : 0;
  return r;
}

namespace {

// Area under the precision-recall curve: precision integrated over recall with
// true positives varying linearly between adjacent cut points and false
// positives interpolated along the segment (closed form of the segment
// integral).
double auc_pr_interpolated(const Ranking& ranking) {
  const double P = ranking.n_relevant;
  double area = 0.0;
  std::int64_t tp = 0, fp = 0;
  for (auto id : ranking.order) {
    if (ranking.relevant[id]) {
      // segment from (tp, fp) to (tp+1, fp)
      const double b = static_cast<double>(tp + fp);
      if (b == 0.0) {
        area += 1.0 / P;
      } else {
        // integral of (tp + s) / (b + s) ds over s in [0, 1]
        area += (1.0 - static_cast<double>(fp) * std::log((b + 1.0) / b)) / P;
      }
      ++tp;
    } else {
      ++fp;  // recall unchanged, no area
    }
  }
  return area;
}

}  // namespace

std::optional<RankMetrics> ranking_metrics(const Ranking& ranking, const RankOptions& options) {
  const std::int32_t n = ranking.n_items();
  const std::int32_t pos = ranking.n_relevant;
  if (pos == 0 || pos == n) return std::nullopt;

  RankMetrics m;
  std::int64_t correct_pairs = 0;
  std::int64_t irrelevant_seen = 0;
  std::int32_t relevant_seen = 0;
  double avg_prec = 0.0;
  std::int32_t lowest_relevant_rank = 0;
  std::int32_t highest_irrelevant_rank = 0;
  for (std::int32_t rank = 1; rank <= n; ++rank) {
    const std::int32_t id = ranking.order[rank - 1];
    if (ranking.relevant[id]) {
      ++relevant_seen;
      correct_pairs += (n - pos) - irrelevant_seen;  // irrelevant items below this one
      if (options.exclusive_avg_prec) {
        avg_prec += rank > 1 ? static_cast<double>(relevant_seen - 1) / (rank - 1) : 0.0;
      } else {
        avg_prec += static_cast<double>(relevant_seen) / rank;
      }
      lowest_relevant_rank = rank;
    } else {
      ++irrelevant_seen;
      if (highest_irrelevant_rank == 0) highest_irrelevant_rank = rank;
    }
  }

  m.auc_roc = static_cast<double>(correct_pairs) /
              (static_cast<double>(pos) * static_cast<double>(n - pos));
  m.rank_loss = 100.0 * (1.0 - m.auc_roc);
  m.auc_pr = auc_pr_interpolated(ranking);
  m.avg_prec = avg_prec / pos;
  m.one_error = ranking.relevant[ranking.order[0]] ? 0.0 : 100.0;
  m.margin = std::max(1, lowest_relevant_rank - highest_irrelevant_rank + 1);
  m.is_error = m.margin > 1 ? 100.0 : 0.0;
  return m;
}

CutoffStats make_cutoff_stats(const Corpus& train) {
  CutoffStats stats;
  stats.train_docs = train.D();
  stats.label_train_freq.assign(train.C(), 0);
  std::vector<std::int64_t> labels_per_doc;
  labels_per_doc.reserve(train.docs.size());
  for (const auto& doc : train.docs) {
    for (auto c : doc.labels) ++stats.label_train_freq[c];
    labels_per_doc.push_back(static_cast<std::int64_t>(doc.labels.size()));
  }
  if (!labels_per_doc.empty()) {
    std::sort(labels_per_doc.begin(), labels_per_doc.end());
    const std::size_t n = labels_per_doc.size();
    stats.median_labels_per_doc =
        (n % 2 == 1) ? static_cast<double>(labels_per_doc[n / 2])
                     : 0.5 * static_cast<double>(labels_per_doc[n / 2 - 1] + labels_per_doc[n / 2]);
  }
  return stats;
}

int select_cutoff(const Ranking& ranking, CutoffMethod method, const CutoffContext& ctx) {
  const std::int32_t n = ranking.n_items();
  switch (method) {
    case CutoffMethod::calibrated:
      return ranking.n_relevant;
    case CutoffMethod::proportional: {
      if (!ctx.train) throw ConfigError("proportional cutoff needs training statistics");
      double expected = 0.0;
      if (ctx.pivot == Pivot::document) {
        expected = ctx.train->median_labels_per_doc;
      } else {
        if (ctx.label_id < 0 ||
            static_cast<std::size_t>(ctx.label_id) >= ctx.train->label_train_freq.size())
          throw ConfigError("proportional cutoff: unknown label");
        if (ctx.train->train_docs <= 0)
          throw ConfigError("proportional cutoff: empty training set");
        expected = static_cast<double>(ctx.test_docs) /
                   static_cast<double>(ctx.train->train_docs) *
                   static_cast<double>(ctx.train->label_train_freq[ctx.label_id]);
      }
      return static_cast<int>(std::min<double>(n, std::ceil(expected)));
    }
    case CutoffMethod::bep: {
      // prefix maximizing F1; smallest prefix on ties
      int best_n = 0;
      double best_f1 = 0.0;
      std::int32_t tp = 0;
      for (std::int32_t k = 1; k <= n; ++k) {
        if (ranking.relevant[ranking.order[k - 1]]) ++tp;
        const double denom = static_cast<double>(k + ranking.n_relevant);
        const double f1 = denom > 0 ? 2.0 * tp / denom : 0.0;
        if (f1 > best_f1) {
          best_f1 = f1;
          best_n = k;
        }
      }
      return best_n;
    }
  }
  return 0;
}

double f1_score(const Confusion& c) {
  const double denom = static_cast<double>(2 * c.tp + c.fp + c.fn);
  if (denom == 0.0) return 0.0;
  return 2.0 * static_cast<double>(c.tp) / denom;
}

F1Result f1_scores(const std::vector<Confusion>& per_item) {
  F1Result r;
  if (per_item.empty()) return r;
  Confusion total;
  double macro_sum = 0.0;
  for (const auto& c : per_item) {
    total += c;
    macro_sum += f1_score(c);
  }
  r.micro = f1_score(total);
  r.macro = macro_sum / static_cast<double>(per_item.size());
  return r;
}

F1Result f1_scores(const std::vector<std::vector<std::uint8_t>>& predictions,
                   const std::vector<std::vector<std::uint8_t>>& truth) {
  if (predictions.size() != truth.size()) throw NumericError("f1_scores: item count mismatch");
  std::vector<Confusion> per_item(predictions.size());
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    if (predictions[i].size() != truth[i].size())
      throw NumericError("f1_scores: item size mismatch");
    for (std::size_t j = 0; j < predictions[i].size(); ++j) {
      if (predictions[i][j] && truth[i][j]) ++per_item[i].tp;
      else if (predictions[i][j]) ++per_item[i].fp;
      else if (truth[i][j]) ++per_item[i].fn;
    }
  }
  return f1_scores(per_item);
}

namespace {

Confusion confusion_at_cutoff(const Ranking& ranking, int cutoff) {
  Confusion c;
  for (std::int32_t k = 0; k < ranking.n_items(); ++k) {
    const bool predicted = k < cutoff;
    const bool rel = ranking.relevant[ranking.order[k]] != 0;
    if (predicted && rel) ++c.tp;
    else if (predicted) ++c.fp;
    else if (rel) ++c.fn;
  }
  return c;
}

}  // namespace

EvalReport evaluate(const Eigen::MatrixXd& scores, const std::vector<std::string>& doc_ids,
                    const std::vector<std::vector<std::int32_t>>& truth,
                    const std::vector<std::int32_t>& evaluated_labels,
                    const Dictionary& label_dict, const EvalOptions& options,
                    const CutoffStats* train_stats) {
  if (evaluated_labels.empty()) throw DataError("evaluate: empty evaluated label set");
  const auto n_docs = static_cast<std::int64_t>(scores.rows());
  if (doc_ids.size() != static_cast<std::size_t>(n_docs) ||
      truth.size() != static_cast<std::size_t>(n_docs))
    throw NumericError("evaluate: document count mismatch");

  const auto n_labels = static_cast<std::int32_t>(evaluated_labels.size());
  // relevance over the evaluated label slice
  std::vector<std::vector<std::uint8_t>> rel(n_docs, std::vector<std::uint8_t>(n_labels, 0));
  for (std::int64_t d = 0; d < n_docs; ++d) {
    for (std::int32_t j = 0; j < n_labels; ++j) {
      const std::int32_t c = evaluated_labels[j];
      rel[d][j] = std::binary_search(truth[d].begin(), truth[d].end(), c) ? 1 : 0;
    }
  }

  EvalReport report;
  report.pivot = options.pivot;
  const std::int64_t n_items = options.pivot == Pivot::document ? n_docs : n_labels;

  RankMetrics macro_sum;
  macro_sum.margin = 0;  // the struct default is the per-item best value
  for (std::int64_t item = 0; item < n_items; ++item) {
    ItemEval ie;
    Eigen::VectorXd item_scores;
    std::vector<std::uint8_t> item_rel;
    CutoffContext ctx;
    ctx.pivot = options.pivot;
    ctx.train = train_stats;
    ctx.test_docs = n_docs;
    if (options.pivot == Pivot::document) {
      ie.id = doc_ids[item];
      item_scores.resize(n_labels);
      item_rel.resize(n_labels);
      for (std::int32_t j = 0; j < n_labels; ++j) {
        item_scores[j] = scores(item, evaluated_labels[j]);
        item_rel[j] = rel[item][j];
      }
    } else {
      const std::int32_t c = evaluated_labels[item];
      ie.id = label_dict.name(c);
      ctx.label_id = c;
      item_scores.resize(n_docs);
      item_rel.resize(n_docs);
      for (std::int64_t d = 0; d < n_docs; ++d) {
        item_scores[d] = scores(d, c);
        item_rel[d] = rel[d][item];
      }
    }

    Ranking ranking = make_ranking(item_scores, item_rel);
    ie.rank = ranking_metrics(ranking, options.rank);
    if (ie.rank) {
      macro_sum.auc_roc += ie.rank->auc_roc;
      macro_sum.auc_pr += ie.rank->auc_pr;
      macro_sum.avg_prec += ie.rank->avg_prec;
      macro_sum.one_error += ie.rank->one_error;
      macro_sum.is_error += ie.rank->is_error;
      macro_sum.rank_loss += ie.rank->rank_loss;
      macro_sum.margin += ie.rank->margin;
      ++report.ranked_items;
    } else {
      ++report.degenerate_items;
    }

    for (auto method : options.cutoffs) {
      const int cutoff = select_cutoff(ranking, method, ctx);
      ie.cutoff[method] = cutoff;
      ie.confusion[method] = confusion_at_cutoff(ranking, cutoff);
    }
    report.items.push_back(std::move(ie));
  }

  if (report.ranked_items > 0) {
    const double n = static_cast<double>(report.ranked_items);
    report.macro.auc_roc = macro_sum.auc_roc / n;
    report.macro.auc_pr = macro_sum.auc_pr / n;
    report.macro.avg_prec = macro_sum.avg_prec / n;
    report.macro.one_error = macro_sum.one_error / n;
    report.macro.is_error = macro_sum.is_error / n;
    report.macro.rank_loss = macro_sum.rank_loss / n;
    report.macro.margin = macro_sum.margin / n;
  }

  for (auto method : options.cutoffs) {
    std::vector<Confusion> per_item;
    per_item.reserve(report.items.size());
    for (const auto& ie : report.items) per_item.push_back(ie.confusion.at(method));
    report.f1[method] = f1_scores(per_item);
  }
  return report;
}

void write_report(const EvalReport& report, std::ostream& out) {
  const char* pivot = pivot_name(report.pivot);
  auto row = [&](const std::string& metric, const std::string& cutoff, double value) {
    out << metric << '\t' << pivot << '\t' << cutoff << '\t' << value << '\n';
  };
  row("auc_roc", "-", report.macro.auc_roc);
  row("auc_pr", "-", report.macro.auc_pr);
  row("avg_prec", "-", report.macro.avg_prec);
  row("one_error", "-", report.macro.one_error);
  row("is_error", "-", report.macro.is_error);
  row("margin", "-", report.macro.margin);
  row("rank_loss", "-", report.macro.rank_loss);
  for (const auto& [method, f1] : report.f1) {
    row("micro_f1", cutoff_name(method), f1.micro);
    row("macro_f1", cutoff_name(method), f1.macro);
  }
  out << "ranked_items\t" << pivot << "\t-\t" << report.ranked_items << '\n';
  out << "degenerate_items\t" << pivot << "\t-\t" << report.degenerate_items << '\n';

  out << "== " << pivot << "-pivoted evaluation: " << report.ranked_items << " ranked items, "
      << report.degenerate_items << " degenerate ==\n";
  out << "== auc_roc " << report.macro.auc_roc << " | auc_pr " << report.macro.auc_pr
      << " | avg_prec " << report.macro.avg_prec << " | one_error " << report.macro.one_error
      << " | is_error " << report.macro.is_error << " | margin " << report.macro.margin
      << " | rank_loss " << report.macro.rank_loss << " ==\n";
  for (const auto& [method, f1] : report.f1) {
    out << "== " << cutoff_name(method) << ": micro_f1 " << f1.micro << " | macro_f1 "
        << f1.macro << " ==\n";
  }
}

}  // namespace mltm
