#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mltm/common.hpp"
#include "mltm/corpus.hpp"

namespace mltm {

enum class Pivot { document, label };
enum class CutoffMethod { proportional, calibrated, bep };

Pivot pivot_from_string(const std::string& s);
CutoffMethod cutoff_from_string(const std::string& s);
const char* pivot_name(Pivot p);
const char* cutoff_name(CutoffMethod m);

// Items ordered by descending score, ties broken by ascending item id.
struct Ranking {
  std::vector<std::int32_t> order;
  std::vector<std::uint8_t> relevant;  // indexed by item id
  std::int32_t n_relevant = 0;

  std::int32_t n_items() const { return static_cast<std::int32_t>(order.size()); }
};

Ranking make_ranking(const Eigen::Ref<const Eigen::VectorXd>& scores,
                     const std::vector<std::uint8_t>& relevant);

struct RankMetrics {
  double auc_roc = 0;
  double auc_pr = 0;
  double avg_prec = 0;
  double one_error = 0;  // 0 or 100 per item
  double is_error = 0;   // 0 or 100 per item
  double rank_loss = 0;  // 100 * (1 - auc_roc)
  double margin = 1;     // 1 (perfect) .. n_items (worst)
};

struct RankOptions {
  // excludes the item itself from its precision term; the default includes it
  bool exclusive_avg_prec = false;
};

// Requires at least one relevant and one irrelevant item; nullopt otherwise.
std::optional<RankMetrics> ranking_metrics(const Ranking& ranking,
                                           const RankOptions& options = {});

struct CutoffStats {
  std::vector<std::int64_t> label_train_freq;  // positives per label in training
  std::int64_t train_docs = 0;
  double median_labels_per_doc = 0;
};

CutoffStats make_cutoff_stats(const Corpus& train);

struct CutoffContext {
  Pivot pivot = Pivot::document;
  const CutoffStats* train = nullptr;  // required for proportional
  std::int64_t test_docs = 0;          // proportional, label pivot
  std::int32_t label_id = -1;          // proportional, label pivot
};

// Number of top-ranked items predicted positive.
int select_cutoff(const Ranking& ranking, CutoffMethod method, const CutoffContext& ctx);

struct Confusion {
  std::int64_t tp = 0, fp = 0, fn = 0;
  Confusion& operator+=(const Confusion& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
};

// harmonic mean of precision and recall; 0 when undefined
double f1_score(const Confusion& c);

struct F1Result {
  double micro = 0;  // F1 of the summed confusion matrix
  double macro = 0;  // mean of per-item F1
};

F1Result f1_scores(const std::vector<Confusion>& per_item);
F1Result f1_scores(const std::vector<std::vector<std::uint8_t>>& predictions,
                   const std::vector<std::vector<std::uint8_t>>& truth);

struct ItemEval {
  std::string id;
  std::optional<RankMetrics> rank;  // absent for degenerate ground truth
  std::map<CutoffMethod, Confusion> confusion;
  std::map<CutoffMethod, int> cutoff;
};

struct EvalReport {
  Pivot pivot = Pivot::document;
  RankMetrics macro;                      // mean over rankable items
  std::int64_t ranked_items = 0;          // items entering the ranking averages
  std::int64_t degenerate_items = 0;      // all-relevant or all-irrelevant items
  std::map<CutoffMethod, F1Result> f1;
  std::vector<ItemEval> items;
};

struct EvalOptions {
  Pivot pivot = Pivot::document;
  std::vector<CutoffMethod> cutoffs{CutoffMethod::proportional, CutoffMethod::calibrated,
                                    CutoffMethod::bep};
  RankOptions rank;
};

// scores: one row per scored test document over the full label space;
// truth: per document, the relevant label ids. Document-pivoted evaluation
// ranks the evaluated labels within each document; label-pivoted evaluation
// ranks the documents within each evaluated label.
EvalReport evaluate(const Eigen::MatrixXd& scores, const std::vector<std::string>& doc_ids,
                    const std::vector<std::vector<std::int32_t>>& truth,
                    const std::vector<std::int32_t>& evaluated_labels,
                    const Dictionary& label_dict, const EvalOptions& options,
                    const CutoffStats* train_stats);

void write_report(const EvalReport& report, std::ostream& out);

}  // namespace mltm
