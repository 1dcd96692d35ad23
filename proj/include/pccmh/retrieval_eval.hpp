#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "pccmh/encoder.hpp"

namespace pccmh {

enum class Direction { XtoY, YtoX };
enum class Relevance {
  LabelEqual,  // same class id => true neighbour
  SharedBits,  // labels are concept bitmasks; any shared bit => true neighbour
};
enum class Method { Pccmh, Cca };

const char* direction_name(Direction d);  // "x2y" / "y2x"

// Top-R retrieved items for one query, ascending Hamming distance, ties by
// ascending item index.
struct QueryResult {
  std::size_t query_index = 0;
  std::vector<std::pair<std::size_t, int>> ranked;  // (item, distance)
};

QueryResult rank_by_hamming(const HashCodeSet& queries, std::size_t q,
                            const HashCodeSet& db, int R);

// AP over a truncated retrieved list: (1/L) sum_r P(r) * rel(r), where L is
// the number of relevant items in the list; 0 when the list has none.
double average_precision(const std::vector<int>& ranked_relevance);

bool is_relevant(int query_label, int db_label, Relevance rel);

// MAP over all queries against the code database. per_query, when given,
// receives one AP per query.
double map_from_codes(const HashCodeSet& query_codes, const std::vector<int>& query_labels,
                      const HashCodeSet& db_codes, const std::vector<int>& db_labels,
                      int R, Relevance rel, std::vector<double>* per_query = nullptr);

// MAP with database labels randomly permuted (semantics destroyed, label
// marginals kept); mean over `repeats` permutations. Chance floor for the
// same rankings.
double permutation_baseline_map(const HashCodeSet& query_codes,
                                const std::vector<int>& query_labels,
                                const HashCodeSet& db_codes,
                                const std::vector<int>& db_labels, int R,
                                Relevance rel, int repeats, std::uint64_t seed);

struct EvalConfig {
  int R = 50;
  Relevance relevance = Relevance::LabelEqual;
};

struct EvalReport {
  std::string task;  // "x2y" (query x against y database) or "y2x"
  int code_length = 0;
  double map = 0.0;
  std::vector<double> per_query_ap;
  // config snapshot
  double lambda = 0.0;
  int m_x = 0;
  int m_y = 0;
  double corr_ratio = 0.0;
  std::uint64_t seed = 0;
  int R = 0;
};

// Encodes queries with the query-side projection and the database with the
// other side, ranks, and averages AP. Relevance comes from labels.
EvalReport mean_average_precision(const HashModel& model,
                                  const FeatureMatrix& query_data,
                                  const std::vector<int>& query_labels,
                                  const FeatureMatrix& db_data,
                                  const std::vector<int>& db_labels,
                                  Direction dir, const EvalConfig& cfg);

struct SweepConfig {
  std::vector<double> ratios;  // each in (0,1]
  int repeats = 1;
  std::uint64_t master_seed = 0;
  double train_fraction = 0.8;
  int R = 50;
  Relevance relevance = Relevance::LabelEqual;
  Method method = Method::Pccmh;
  double cca_reg = 1e-4;
};

struct SweepRow {
  double ratio = 0.0;
  std::string direction;
  int c = 0;
  bool ok = true;
  double map_mean = 0.0;
  double map_std = 0.0;
  std::uint64_t seed = 0;
  std::string error;  // set when !ok
};

// The dataset is split once from the master seed; queries are the test split,
// the database is the train split. One training run per (ratio, repeat) with
// a derived seed: the corresponded subset is re-drawn from the train split's
// pair pool and anchors re-fit, so cells differ only in the correspondence
// available to training.
// Aggregated (mean/std over repeats) rows come first per (ratio, direction);
// failed cells contribute an error row each and do not abort the sweep.
std::vector<SweepRow> correspondence_sweep(const MultiModalDataset& ds,
                                           const TrainConfig& tcfg,
                                           const SweepConfig& scfg);

// Header "ratio,direction,c,map_mean,map_std,seed"; error rows carry the
// literal word "error" in the map columns.
void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows);

}  // namespace pccmh
