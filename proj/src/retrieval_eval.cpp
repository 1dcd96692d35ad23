#include "pccmh/retrieval_eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>

#include "pccmh/baseline_cca.hpp"
#include "pccmh/rng.hpp"

namespace pccmh {

namespace {

void check_labels(const std::vector<int>& labels, std::size_t n, const char* side) {
  if (labels.empty()) {
    throw InputError(ErrorKind::MissingLabels, std::string(side) + " labels are required");
  }
  if (labels.size() != n) {
    throw InputError(ErrorKind::DimensionMismatch,
                     std::string(side) + " has " + std::to_string(labels.size()) +
                         " labels for " + std::to_string(n) + " items");
  }
}

double mean_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double std_of(const std::vector<double>& v, double mean) {
  if (v.empty()) return 0.0;
  double acc = 0.0;
  for (double x : v) acc += (x - mean) * (x - mean);
  return std::sqrt(acc / static_cast<double>(v.size()));
}

// Rebuilds the dataset with only the first k shuffled pairs corresponded;
// the dropped pairs decouple into per-modality singles.
MultiModalDataset take_correspondence(const MultiModalDataset& ds, double ratio,
                                      std::uint64_t seed) {
  const std::size_t pool = ds.n_corr;
  std::vector<int> pairs(pool);
  std::iota(pairs.begin(), pairs.end(), 0);
  rng::Engine eng(seed);
  rng::shuffle(pairs, eng);
  const std::size_t k = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::floor(ratio * static_cast<double>(pool))));
  std::vector<int> kept(pairs.begin(), pairs.begin() + static_cast<std::ptrdiff_t>(k));
  std::vector<int> dropped(pairs.begin() + static_cast<std::ptrdiff_t>(k), pairs.end());
  std::sort(kept.begin(), kept.end());
  std::sort(dropped.begin(), dropped.end());

  MultiModalDataset out;
  out.n_corr = k;
  out.x.resize(ds.x.rows(), ds.x.cols());
  out.y.resize(ds.y.rows(), ds.y.cols());
  out.labels_x.reserve(static_cast<std::size_t>(ds.x.rows()));
  out.labels_y.reserve(static_cast<std::size_t>(ds.y.rows()));
  Eigen::Index rx = 0, ry = 0;
  for (int i : kept) {
    out.x.row(rx++) = ds.x.row(i);
    out.y.row(ry++) = ds.y.row(i);
    out.labels_x.push_back(ds.labels_x[static_cast<std::size_t>(i)]);
    out.labels_y.push_back(ds.labels_y[static_cast<std::size_t>(i)]);
  }
  for (int i : dropped) {
    out.x.row(rx++) = ds.x.row(i);
    out.labels_x.push_back(ds.labels_x[static_cast<std::size_t>(i)]);
  }
  for (int i : dropped) {
    out.y.row(ry++) = ds.y.row(i);
    out.labels_y.push_back(ds.labels_y[static_cast<std::size_t>(i)]);
  }
  for (Eigen::Index i = static_cast<Eigen::Index>(pool); i < ds.x.rows(); ++i) {
    out.x.row(rx++) = ds.x.row(i);
    out.labels_x.push_back(ds.labels_x[static_cast<std::size_t>(i)]);
  }
  for (Eigen::Index i = static_cast<Eigen::Index>(pool); i < ds.y.rows(); ++i) {
    out.y.row(ry++) = ds.y.row(i);
    out.labels_y.push_back(ds.labels_y[static_cast<std::size_t>(i)]);
  }
  return out;
}

struct CellMaps {
  double x2y = 0.0;
  double y2x = 0.0;
};

CellMaps run_pccmh_cell(const MultiModalDataset& train_ds, const MultiModalDataset& test_ds,
                        const TrainConfig& tcfg, const SweepConfig& scfg) {
  TrainConfig tc = tcfg;
  tc.m_x = std::min<int>(tc.m_x, static_cast<int>(train_ds.x.rows()));
  tc.m_y = std::min<int>(tc.m_y, static_cast<int>(train_ds.y.rows()));
  const HashModel model = train(train_ds, tc);
  const EvalConfig ecfg{scfg.R, scfg.relevance};
  CellMaps maps;
  maps.x2y = mean_average_precision(model, test_ds.x, test_ds.labels_x, train_ds.y,
                                    train_ds.labels_y, Direction::XtoY, ecfg)
                 .map;
  maps.y2x = mean_average_precision(model, test_ds.y, test_ds.labels_y, train_ds.x,
                                    train_ds.labels_x, Direction::YtoX, ecfg)
                 .map;
  return maps;
}

CellMaps run_cca_cell(const MultiModalDataset& train_ds, const MultiModalDataset& test_ds,
                      const TrainConfig& tcfg, const SweepConfig& scfg) {
  const Eigen::Index k = static_cast<Eigen::Index>(train_ds.n_corr);
  const CcaModel model = train_cca(train_ds.x.topRows(k), train_ds.y.topRows(k),
                                   tcfg.c, scfg.cca_reg);
  CellMaps maps;
  const HashCodeSet qx = encode_cca(model, test_ds.x, Modality::X);
  const HashCodeSet qy = encode_cca(model, test_ds.y, Modality::Y);
  const HashCodeSet dbx = encode_cca(model, train_ds.x, Modality::X);
  const HashCodeSet dby = encode_cca(model, train_ds.y, Modality::Y);
  maps.x2y = map_from_codes(qx, test_ds.labels_x, dby, train_ds.labels_y, scfg.R,
                            scfg.relevance);
  maps.y2x = map_from_codes(qy, test_ds.labels_y, dbx, train_ds.labels_x, scfg.R,
                            scfg.relevance);
  return maps;
}

}  // namespace

const char* direction_name(Direction d) {
  return d == Direction::XtoY ? "x2y" : "y2x";
}

QueryResult rank_by_hamming(const HashCodeSet& queries, std::size_t q,
                            const HashCodeSet& db, int R) {
  if (db.n == 0) throw InputError(ErrorKind::EmptyDatabase, "code database is empty");
  if (R < 1) throw InputError(ErrorKind::BadArgument, "R must be at least 1");
  std::vector<std::pair<int, std::size_t>> order(db.n);
  for (std::size_t i = 0; i < db.n; ++i) {
    order[i] = {hamming_distance(queries, q, db, i), i};
  }
  const std::size_t keep = std::min<std::size_t>(static_cast<std::size_t>(R), db.n);
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep),
                    order.end());
  QueryResult out;
  out.query_index = q;
  out.ranked.reserve(keep);
  for (std::size_t r = 0; r < keep; ++r) {
    out.ranked.emplace_back(order[r].second, order[r].first);
  }
  return out;
}

double average_precision(const std::vector<int>& ranked_relevance) {
  int hits = 0;
  double acc = 0.0;
  for (std::size_t r = 0; r < ranked_relevance.size(); ++r) {
    if (ranked_relevance[r] != 0) {
      ++hits;
      acc += static_cast<double>(hits) / static_cast<double>(r + 1);
    }
  }
  return hits == 0 ? 0.0 : acc / static_cast<double>(hits);
}

bool is_relevant(int query_label, int db_label, Relevance rel) {
  if (rel == Relevance::LabelEqual) return query_label == db_label;
  return (static_cast<unsigned>(query_label) & static_cast<unsigned>(db_label)) != 0;
}

double map_from_codes(const HashCodeSet& query_codes, const std::vector<int>& query_labels,
                      const HashCodeSet& db_codes, const std::vector<int>& db_labels,
                      int R, Relevance rel, std::vector<double>* per_query) {
  check_labels(query_labels, query_codes.n, "query side");
  check_labels(db_labels, db_codes.n, "database side");
  if (db_codes.n == 0) throw InputError(ErrorKind::EmptyDatabase, "code database is empty");
  if (query_codes.c != db_codes.c) {
    throw InputError(ErrorKind::CodeLengthMismatch,
                     "code lengths differ: " + std::to_string(query_codes.c) + " vs " +
                         std::to_string(db_codes.c));
  }
  if (R < 1) throw InputError(ErrorKind::BadArgument, "R must be at least 1");
  std::vector<double> ap(query_codes.n, 0.0);
  parallel_for(static_cast<std::ptrdiff_t>(query_codes.n),
               [&](std::ptrdiff_t begin, std::ptrdiff_t end) {
                 std::vector<int> relevance;
                 for (std::ptrdiff_t q = begin; q < end; ++q) {
                   const QueryResult res =
                       rank_by_hamming(query_codes, static_cast<std::size_t>(q), db_codes, R);
                   relevance.clear();
                   for (const auto& [item, dist] : res.ranked) {
                     relevance.push_back(is_relevant(query_labels[static_cast<std::size_t>(q)],
                                                     db_labels[item], rel)
                                             ? 1
                                             : 0);
                   }
                   ap[static_cast<std::size_t>(q)] = average_precision(relevance);
                 }
               });
  if (per_query) *per_query = ap;
  return mean_of(ap);
}

double permutation_baseline_map(const HashCodeSet& query_codes,
                                const std::vector<int>& query_labels,
                                const HashCodeSet& db_codes,
                                const std::vector<int>& db_labels, int R,
                                Relevance rel, int repeats, std::uint64_t seed) {
  if (repeats < 1) throw InputError(ErrorKind::BadArgument, "repeats must be at least 1");
  check_labels(db_labels, db_codes.n, "database side");
  double acc = 0.0;
  for (int t = 0; t < repeats; ++t) {
    std::vector<int> permuted = db_labels;
    rng::Engine eng(rng::mix(seed, static_cast<std::uint64_t>(t)));
    rng::shuffle(permuted, eng);
    acc += map_from_codes(query_codes, query_labels, db_codes, permuted, R, rel);
  }
  return acc / static_cast<double>(repeats);
}

EvalReport mean_average_precision(const HashModel& model,
                                  const FeatureMatrix& query_data,
                                  const std::vector<int>& query_labels,
                                  const FeatureMatrix& db_data,
                                  const std::vector<int>& db_labels,
                                  Direction dir, const EvalConfig& cfg) {
  const Modality query_mod = dir == Direction::XtoY ? Modality::X : Modality::Y;
  const Modality db_mod = dir == Direction::XtoY ? Modality::Y : Modality::X;
  const HashCodeSet query_codes = encode(model, query_data, query_mod);
  const HashCodeSet db_codes = encode(model, db_data, db_mod);

  EvalReport report;
  report.task = direction_name(dir);
  report.code_length = model.c;
  report.map = map_from_codes(query_codes, query_labels, db_codes, db_labels, cfg.R,
                              cfg.relevance, &report.per_query_ap);
  report.lambda = model.meta.lambda;
  report.m_x = model.meta.m_x;
  report.m_y = model.meta.m_y;
  report.corr_ratio = model.meta.corr_ratio;
  report.seed = model.meta.seed;
  report.R = cfg.R;
  return report;
}

std::vector<SweepRow> correspondence_sweep(const MultiModalDataset& ds,
                                           const TrainConfig& tcfg,
                                           const SweepConfig& scfg) {
  if (scfg.ratios.empty()) {
    throw InputError(ErrorKind::BadArgument, "sweep needs at least one ratio");
  }
  for (double r : scfg.ratios) {
    if (!(r > 0.0 && r <= 1.0)) {
      throw InputError(ErrorKind::BadArgument, "ratios must lie in (0,1]");
    }
  }
  if (scfg.repeats < 1) throw InputError(ErrorKind::BadArgument, "repeats must be at least 1");
  if (ds.n_corr < 1) {
    throw InputError(ErrorKind::BadArgument, "sweep needs a corresponded pair pool");
  }
  check_labels(ds.labels_x, static_cast<std::size_t>(ds.x.rows()), "modality x");
  check_labels(ds.labels_y, static_cast<std::size_t>(ds.y.rows()), "modality y");

  // One split for the whole sweep: every cell trains against the same
  // database rows and answers the same queries, so ratios differ only in the
  // correspondence information handed to training. The salt sits far above
  // any ratio index to keep the seed streams apart.
  const auto split = split_dataset(ds, scfg.train_fraction,
                                   rng::mix(scfg.master_seed, 0xffffffffULL));
  const MultiModalDataset& train_side = split.first;
  const MultiModalDataset& test_side = split.second;

  std::vector<SweepRow> rows;
  for (std::size_t ri = 0; ri < scfg.ratios.size(); ++ri) {
    const double ratio = scfg.ratios[ri];
    const std::uint64_t ratio_seed = rng::mix(scfg.master_seed, ri);
    std::vector<double> maps_x2y, maps_y2x;
    for (int t = 0; t < scfg.repeats; ++t) {
      const std::uint64_t cell_seed = rng::mix(ratio_seed, static_cast<std::uint64_t>(t));
      try {
        const MultiModalDataset train_ds =
            take_correspondence(train_side, ratio, rng::mix(cell_seed, 0));
        TrainConfig tc = tcfg;
        tc.seed = rng::mix(cell_seed, 2);
        const CellMaps maps = scfg.method == Method::Pccmh
                                  ? run_pccmh_cell(train_ds, test_side, tc, scfg)
                                  : run_cca_cell(train_ds, test_side, tc, scfg);
        maps_x2y.push_back(maps.x2y);
        maps_y2x.push_back(maps.y2x);
      } catch (const Error& e) {
        SweepRow bad;
        bad.ratio = ratio;
        bad.direction = "both";
        bad.c = tcfg.c;
        bad.ok = false;
        bad.seed = cell_seed;
        bad.error = e.what();
        rows.push_back(std::move(bad));
      }
    }
    for (const auto& [name, maps] :
         {std::pair<const char*, const std::vector<double>*>{"x2y", &maps_x2y},
          {"y2x", &maps_y2x}}) {
      if (maps->empty()) continue;
      SweepRow row;
      row.ratio = ratio;
      row.direction = name;
      row.c = tcfg.c;
      row.map_mean = mean_of(*maps);
      row.map_std = std_of(*maps, row.map_mean);
      row.seed = ratio_seed;
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
  os << "ratio,direction,c,map_mean,map_std,seed\n";
  char buf[64];
  for (const SweepRow& row : rows) {
    std::snprintf(buf, sizeof(buf), "%g", row.ratio);
    os << buf << ',' << row.direction << ',' << row.c << ',';
    if (row.ok) {
      std::snprintf(buf, sizeof(buf), "%.6f,%.6f", row.map_mean, row.map_std);
      os << buf;
    } else {
      os << "error,error";
    }
    os << ',' << row.seed << '\n';
  }
}

}  // namespace pccmh
