#include "vdlab/eval.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>

#include <json.hpp>

#include "vdlab/errors.hpp"
#include "vdlab/parallel.hpp"
#include "vdlab/util.hpp"

namespace vdlab {

ConfusionCounts confusion(const FrameLabels& pred, const FrameLabels& truth) {
  if (pred.size() != truth.size()) {
    throw ValueError(strfmt("confusion: length mismatch (%zu vs %zu); resample labels first",
                            pred.size(), truth.size()));
  }
  if (std::abs(pred.frame_rate - truth.frame_rate) > 1e-9) {
    throw ValueError(strfmt("confusion: frame rate mismatch (%g vs %g)", pred.frame_rate,
                            truth.frame_rate));
  }
  ConfusionCounts c;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool p = pred.labels[i] != 0;
    const bool t = truth.labels[i] != 0;
    if (p && t) ++c.tp;
    else if (p && !t) ++c.fp;
    else if (!p && t) ++c.fn;
    else ++c.tn;
  }
  return c;
}

namespace {

std::optional<double> ratio_pct(std::uint64_t num, std::uint64_t denom) {
  if (denom == 0) return std::nullopt;
  return 100.0 * static_cast<double>(num) / static_cast<double>(denom);
}

}  // namespace

MetricsReport metrics(const ConfusionCounts& c) {
  if (c.total() == 0) throw ValueError("metrics: empty counts");
  MetricsReport r;
  r.accuracy = ratio_pct(c.tp + c.tn, c.total());
  r.precision = ratio_pct(c.tp, c.tp + c.fp);
  r.recall = ratio_pct(c.tp, c.tp + c.fn);
  r.fpr = ratio_pct(c.fp, c.fp + c.tn);
  r.fnr = ratio_pct(c.fn, c.fn + c.tp);
  if (r.precision && r.recall && (*r.precision + *r.recall) > 0.0) {
    r.f_measure = 2.0 * (*r.precision) * (*r.recall) / (*r.precision + *r.recall);
  }
  return r;
}

std::vector<std::pair<std::string, std::optional<double>>> metrics_rows(
    const MetricsReport& report) {
  return {{"accuracy", report.accuracy},   {"recall", report.recall},
          {"precision", report.precision}, {"f_measure", report.f_measure},
          {"fpr", report.fpr},             {"fnr", report.fnr}};
}

PerSongReport per_song_report(
    const std::vector<std::tuple<std::string, FrameLabels, FrameLabels>>& tracks) {
  if (tracks.empty()) throw ValueError("per_song_report: no songs");
  std::set<std::string> seen;
  PerSongReport report;
  for (const auto& [song, pred, truth] : tracks) {
    if (!seen.insert(song).second) {
      throw ValueError("per_song_report: duplicate song id '" + song + "'");
    }
    SongEval eval;
    eval.song = song;
    eval.counts = confusion(pred, truth);
    eval.report = metrics(eval.counts);
    report.pooled += eval.counts;
    report.songs.push_back(std::move(eval));
  }
  std::sort(report.songs.begin(), report.songs.end(), [](const SongEval& a, const SongEval& b) {
    const double aa = a.report.accuracy.value_or(0.0);
    const double bb = b.report.accuracy.value_or(0.0);
    return aa != bb ? aa < bb : a.song < b.song;
  });
  report.micro = metrics(report.pooled);

  // Unweighted mean of the per-song percentages, skipping absent values.
  auto mean_of = [&](auto getter) -> std::optional<double> {
    double sum = 0.0;
    std::size_t n = 0;
    for (const SongEval& s : report.songs) {
      const std::optional<double> v = getter(s.report);
      if (v) {
        sum += *v;
        ++n;
      }
    }
    if (n == 0) return std::nullopt;
    return sum / static_cast<double>(n);
  };
  report.macro.accuracy = mean_of([](const MetricsReport& r) { return r.accuracy; });
  report.macro.recall = mean_of([](const MetricsReport& r) { return r.recall; });
  report.macro.precision = mean_of([](const MetricsReport& r) { return r.precision; });
  report.macro.f_measure = mean_of([](const MetricsReport& r) { return r.f_measure; });
  report.macro.fpr = mean_of([](const MetricsReport& r) { return r.fpr; });
  report.macro.fnr = mean_of([](const MetricsReport& r) { return r.fnr; });
  return report;
}

namespace {

std::string opt_cell(const std::optional<double>& v) {
  return v ? strfmt("%.4f", *v) : std::string("");
}

nlohmann::json metrics_json(const MetricsReport& r) {
  nlohmann::json j;
  for (const auto& [name, value] : metrics_rows(r)) {
    if (value) {
      j[name] = *value;
    } else {
      j[name] = nullptr;
    }
  }
  return j;
}

}  // namespace

void write_per_song_csv(const std::string& path, const PerSongReport& report) {
  std::string out = "song,accuracy,recall,precision,f_measure,fpr,fnr,frames\n";
  for (const SongEval& s : report.songs) {
    out += strfmt("%s,%s,%s,%s,%s,%s,%s,%llu\n", s.song.c_str(),
                  opt_cell(s.report.accuracy).c_str(), opt_cell(s.report.recall).c_str(),
                  opt_cell(s.report.precision).c_str(), opt_cell(s.report.f_measure).c_str(),
                  opt_cell(s.report.fpr).c_str(), opt_cell(s.report.fnr).c_str(),
                  static_cast<unsigned long long>(s.counts.total()));
  }
  out += strfmt("MICRO,%s,%s,%s,%s,%s,%s,%llu\n", opt_cell(report.micro.accuracy).c_str(),
                opt_cell(report.micro.recall).c_str(), opt_cell(report.micro.precision).c_str(),
                opt_cell(report.micro.f_measure).c_str(), opt_cell(report.micro.fpr).c_str(),
                opt_cell(report.micro.fnr).c_str(),
                static_cast<unsigned long long>(report.pooled.total()));
  out += strfmt("MACRO,%s,%s,%s,%s,%s,%s,\n", opt_cell(report.macro.accuracy).c_str(),
                opt_cell(report.macro.recall).c_str(), opt_cell(report.macro.precision).c_str(),
                opt_cell(report.macro.f_measure).c_str(), opt_cell(report.macro.fpr).c_str(),
                opt_cell(report.macro.fnr).c_str());
  write_text_file(path, out);
}

void write_metrics_json(const std::string& path, const PerSongReport& report,
                        const std::string& system_name) {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["kind"] = "evaluation";
  j["system"] = system_name;
  j["micro"] = metrics_json(report.micro);
  j["macro"] = metrics_json(report.macro);
  j["pooled_counts"] = {{"tp", report.pooled.tp},
                        {"fp", report.pooled.fp},
                        {"tn", report.pooled.tn},
                        {"fn", report.pooled.fn}};
  nlohmann::json songs = nlohmann::json::array();
  for (const SongEval& s : report.songs) {
    nlohmann::json song;
    song["song"] = s.song;
    song["metrics"] = metrics_json(s.report);
    song["frames"] = s.counts.total();
    songs.push_back(song);
  }
  j["songs"] = songs;
  write_text_file(path, j.dump(2) + "\n");
}

double HeatmapGrid::region_mean(double rate_lo, double rate_hi, double dev_lo,
                                double dev_hi) const {
  double sum = 0.0;
  std::size_t n = 0;
  for (const Matrix& grid : cells) {
    for (std::size_t r = 0; r < rates.size(); ++r) {
      for (std::size_t d = 0; d < deviations.size(); ++d) {
        if (rates[r] >= rate_lo && rates[r] <= rate_hi && deviations[d] >= dev_lo &&
            deviations[d] <= dev_hi) {
          sum += grid(r, d);
          ++n;
        }
      }
    }
  }
  if (n == 0) throw ValueError("heatmap region is empty");
  return sum / static_cast<double>(n);
}

HeatmapGrid vibrato_heatmap(const std::vector<VibratoGridEntry>& manifest,
                            const std::map<std::string, FrameLabels>& predictions) {
  HeatmapGrid grid;
  grid.formants = vibrato_grid_formants();
  grid.rates = vibrato_grid_rates();
  grid.deviations = vibrato_grid_deviations();
  grid.cells.assign(grid.formants.size(), Matrix(grid.rates.size(), grid.deviations.size()));
  Matrix counts(grid.rates.size(), grid.deviations.size());
  std::vector<Matrix> cell_counts(grid.formants.size(), counts);

  std::string missing;
  for (const VibratoGridEntry& e : manifest) {
    auto pred = predictions.find(e.filename);
    if (pred == predictions.end()) {
      missing += missing.empty() ? e.filename : ", " + e.filename;
      continue;
    }
    const auto f = std::find(grid.formants.begin(), grid.formants.end(), e.formant);
    const auto r = std::find(grid.rates.begin(), grid.rates.end(), e.rate);
    const auto d = std::find(grid.deviations.begin(), grid.deviations.end(), e.deviation);
    if (f == grid.formants.end() || r == grid.rates.end() || d == grid.deviations.end()) {
      throw ValueError("vibrato_heatmap: manifest entry outside the 7x8x6 grid: " + e.filename);
    }
    const FrameLabels& labels = pred->second;
    if (labels.size() == 0) throw ValueError("vibrato_heatmap: empty prediction " + e.filename);
    std::size_t nonvocal = 0;
    for (std::uint8_t l : labels.labels) nonvocal += (l == 0);
    const double accuracy = static_cast<double>(nonvocal) / static_cast<double>(labels.size());

    const std::size_t fi = static_cast<std::size_t>(f - grid.formants.begin());
    const std::size_t ri = static_cast<std::size_t>(r - grid.rates.begin());
    const std::size_t di = static_cast<std::size_t>(d - grid.deviations.begin());
    grid.cells[fi](ri, di) += accuracy;
    cell_counts[fi](ri, di) += 1.0;
  }
  if (!missing.empty()) {
    throw ValueError("vibrato_heatmap: missing predictions for: " + missing);
  }
  for (std::size_t f = 0; f < grid.cells.size(); ++f) {
    for (std::size_t r = 0; r < grid.rates.size(); ++r) {
      for (std::size_t d = 0; d < grid.deviations.size(); ++d) {
        const double n = cell_counts[f](r, d);
        if (n == 0.0) {
          throw ValueError(strfmt("vibrato_heatmap: empty cell (%s, %g Hz, %g st)",
                                  grid.formants[f].c_str(), grid.rates[r],
                                  grid.deviations[d]));
        }
        grid.cells[f](r, d) /= n;
      }
    }
  }
  return grid;
}

void write_heatmap_csv(const HeatmapGrid& grid, const std::string& dir,
                       const std::string& prefix) {
  std::filesystem::create_directories(dir);
  for (std::size_t f = 0; f < grid.formants.size(); ++f) {
    std::string out = "rate_hz";
    for (double d : grid.deviations) out += strfmt(",dev_%g", d);
    out += "\n";
    for (std::size_t r = 0; r < grid.rates.size(); ++r) {
      out += strfmt("%g", grid.rates[r]);
      for (std::size_t d = 0; d < grid.deviations.size(); ++d) {
        out += strfmt(",%.6f", grid.cells[f](r, d));
      }
      out += "\n";
    }
    write_text_file(dir + "/" + prefix + "_" + grid.formants[f] + ".csv", out);
  }
}

void write_heatmap_pgm(const HeatmapGrid& grid, const std::string& dir,
                       const std::string& prefix, int cell_px) {
  std::filesystem::create_directories(dir);
  const std::size_t rows = grid.rates.size();
  const std::size_t cols = grid.deviations.size();
  for (std::size_t f = 0; f < grid.formants.size(); ++f) {
    std::string out = strfmt("P2\n%zu %zu\n255\n", cols * cell_px, rows * cell_px);
    for (std::size_t py = 0; py < rows * cell_px; ++py) {
      // Rate increases upward: top pixel row shows the highest rate.
      const std::size_t r = rows - 1 - py / cell_px;
      for (std::size_t px = 0; px < cols * cell_px; ++px) {
        const std::size_t d = px / cell_px;
        const int v = static_cast<int>(std::lround(
            std::clamp(grid.cells[f](r, d), 0.0, 1.0) * 255.0));
        out += strfmt("%d ", v);
      }
      out += "\n";
    }
    write_text_file(dir + "/" + prefix + "_" + grid.formants[f] + ".pgm", out);
  }
}

std::vector<SnrSweepRow> snr_sweep(const std::vector<StemPair>& stems,
                                   const std::vector<NamedPredictor>& predictors,
                                   const std::vector<double>& snr_levels_db,
                                   double excerpt_seconds, int jobs) {
  if (stems.empty()) throw ValueError("snr_sweep: no stems");
  if (snr_levels_db.empty()) throw ValueError("snr_sweep: no SNR levels");
  if (predictors.empty()) throw ValueError("snr_sweep: no predictors");

  struct Task {
    std::size_t predictor, level, stem;
  };
  std::vector<Task> tasks;
  for (std::size_t p = 0; p < predictors.size(); ++p) {
    for (std::size_t l = 0; l < snr_levels_db.size(); ++l) {
      for (std::size_t s = 0; s < stems.size(); ++s) tasks.push_back({p, l, s});
    }
  }

  std::vector<ConfusionCounts> task_counts(tasks.size());
  parallel_for(tasks.size(), jobs, [&](std::size_t i) {
    const Task& task = tasks[i];
    SnrMixSpec spec;
    spec.target_snr_db = snr_levels_db[task.level];
    spec.excerpt_seconds = excerpt_seconds;
    const SnrMixResult mixed = mix_at_snr(stems[task.stem].vocal,
                                          stems[task.stem].instrumental, spec);
    const FrameLabels pred = predictors[task.predictor].predict(mixed.mix);
    const FrameLabels truth =
        labels_to_frames(stems[task.stem].truth, pred.frame_rate, pred.size());
    task_counts[i] = confusion(pred, truth);
  });

  std::vector<SnrSweepRow> rows;
  for (std::size_t p = 0; p < predictors.size(); ++p) {
    for (std::size_t l = 0; l < snr_levels_db.size(); ++l) {
      SnrSweepRow row;
      row.model = predictors[p].name;
      row.snr_db = snr_levels_db[l];
      for (std::size_t i = 0; i < tasks.size(); ++i) {
        if (tasks[i].predictor == p && tasks[i].level == l) row.counts += task_counts[i];
      }
      const MetricsReport r = metrics(row.counts);
      row.fpr = r.fpr;
      row.fnr = r.fnr;
      row.error_rate = 100.0 *
                       static_cast<double>(row.counts.fp + row.counts.fn) /
                       static_cast<double>(row.counts.total());
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

void write_snr_sweep_csv(const std::string& path, const std::vector<SnrSweepRow>& rows) {
  std::string out = "model,snr_db,fpr,fnr,error_rate,frames\n";
  for (const SnrSweepRow& r : rows) {
    out += strfmt("%s,%g,%s,%s,%.4f,%llu\n", r.model.c_str(), r.snr_db,
                  opt_cell(r.fpr).c_str(), opt_cell(r.fnr).c_str(), r.error_rate,
                  static_cast<unsigned long long>(r.counts.total()));
  }
  write_text_file(path, out);
}

void write_snr_sweep_json(const std::string& path, const std::vector<SnrSweepRow>& rows) {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["kind"] = "snr_sweep";
  nlohmann::json arr = nlohmann::json::array();
  for (const SnrSweepRow& r : rows) {
    nlohmann::json row;
    row["model"] = r.model;
    row["snr_db"] = r.snr_db;
    row["fpr"] = r.fpr ? nlohmann::json(*r.fpr) : nlohmann::json(nullptr);
    row["fnr"] = r.fnr ? nlohmann::json(*r.fnr) : nlohmann::json(nullptr);
    row["error_rate"] = r.error_rate;
    row["frames"] = r.counts.total();
    arr.push_back(row);
  }
  j["rows"] = arr;
  write_text_file(path, j.dump(2) + "\n");
}

}  // namespace vdlab
