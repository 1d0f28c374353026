#pragma once

// Command implementations behind the `alarm` executable: measure, batch,
// agree, overlay, phantom. Argument parsing lives in the tool's main();
// everything here takes parsed values, so tests can call commands directly.
//
// Exit codes: 0 success; 1 pipeline error (stderr names the failing stage);
// 2 configuration/usage error. Every output file is written atomically.

#include <algorithm>
#include <array>
#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "alarm/agree.hpp"
#include "alarm/csv.hpp"
#include "alarm/formats.hpp"
#include "alarm/gzip.hpp"
#include "alarm/json_writer.hpp"
#include "alarm/phantom.hpp"
#include "alarm/ppm.hpp"
#include "alarm/report.hpp"
#include "alarm/roi.hpp"
#include "alarm/segment.hpp"

namespace alarmkit {

struct PipelineConfig {
  RoiConfig roi;
  SegmenterConfig segmenter;
  bool flip_x = false, flip_y = false, flip_z = false;
  std::string out_dir = ".";
  double overlay_window_low = -100.0;
  double overlay_window_high = 200.0;
};

namespace cli_detail {

[[noreturn]] inline void config_fail(const std::string& msg) {
  throw Error(ErrorCode::InvalidConfig, "config", msg);
}

inline void reject_unknown_keys(const nlohmann::json& j,
                                const std::vector<std::string>& known,
                                const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const std::string& k : known) ok = ok || it.key() == k;
    if (!ok) config_fail("unknown key \"" + it.key() + "\" in " + where);
  }
}

inline double number_field(const nlohmann::json& j, const char* key,
                           double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number()) config_fail(std::string(key) + " must be a number");
  return j[key].get<double>();
}

inline bool bool_field(const nlohmann::json& j, const char* key,
                       bool fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_boolean())
    config_fail(std::string(key) + " must be a boolean");
  return j[key].get<bool>();
}

inline std::string string_field(const nlohmann::json& j, const char* key,
                                const std::string& fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_string()) config_fail(std::string(key) + " must be a string");
  return j[key].get<std::string>();
}

inline std::array<double, 2> window_field(const nlohmann::json& j,
                                          const char* key,
                                          std::array<double, 2> fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_array() || j[key].size() != 2 || !j[key][0].is_number() ||
      !j[key][1].is_number())
    config_fail(std::string(key) + " must be [low, high]");
  return {j[key][0].get<double>(), j[key][1].get<double>()};
}

}  // namespace cli_detail

inline PipelineConfig parse_pipeline_config(const nlohmann::json& j) {
  using namespace cli_detail;
  if (!j.is_object()) config_fail("config root must be a JSON object");
  reject_unknown_keys(j,
                      {"alpha", "circle_radius_mm", "volume_threshold_mm3",
                       "hu_cutoff", "segmenter", "flip_x", "flip_y", "flip_z",
                       "out_dir", "overlay_window"},
                      "config");
  PipelineConfig c;
  c.roi.alpha = number_field(j, "alpha", c.roi.alpha);
  c.roi.circle_radius_mm =
      number_field(j, "circle_radius_mm", c.roi.circle_radius_mm);
  c.roi.volume_threshold_mm3 =
      number_field(j, "volume_threshold_mm3", c.roi.volume_threshold_mm3);
  c.roi.hu_cutoff = number_field(j, "hu_cutoff", c.roi.hu_cutoff);
  c.flip_x = bool_field(j, "flip_x", false);
  c.flip_y = bool_field(j, "flip_y", false);
  c.flip_z = bool_field(j, "flip_z", false);
  c.out_dir = string_field(j, "out_dir", c.out_dir);
  auto win = window_field(j, "overlay_window",
                          {c.overlay_window_low, c.overlay_window_high});
  c.overlay_window_low = win[0];
  c.overlay_window_high = win[1];
  if (!(c.overlay_window_low < c.overlay_window_high))
    config_fail("overlay_window must have low < high");

  if (j.contains("segmenter")) {
    const nlohmann::json& s = j["segmenter"];
    if (!s.is_object()) config_fail("segmenter must be an object");
    reject_unknown_keys(
        s, {"source", "mask_path", "hu_window", "closing_radius_mm", "command"},
        "segmenter");
    const std::string src = string_field(s, "source", "threshold");
    if (src == "mask_file") c.segmenter.source = SegmenterSource::MaskFile;
    else if (src == "threshold") c.segmenter.source = SegmenterSource::Threshold;
    else if (src == "external") c.segmenter.source = SegmenterSource::External;
    else config_fail("segmenter source must be mask_file, threshold or external");
    c.segmenter.mask_path = string_field(s, "mask_path", "");
    auto hw = window_field(s, "hu_window",
                           {c.segmenter.hu_low, c.segmenter.hu_high});
    c.segmenter.hu_low = hw[0];
    c.segmenter.hu_high = hw[1];
    c.segmenter.closing_radius_mm =
        number_field(s, "closing_radius_mm", c.segmenter.closing_radius_mm);
    c.segmenter.command_template = string_field(s, "command", "");
  }

  // Surface invalid values now, before any input is touched.
  try {
    validate(c.roi);
    validate(c.segmenter);
  } catch (Error& e) {
    throw Error(ErrorCode::InvalidConfig, "config", e.what());
  }
  return c;
}

inline PipelineConfig load_pipeline_config(const std::string& path) {
  std::vector<std::uint8_t> bytes;
  try {
    bytes = read_file(path);
  } catch (Error& e) {
    throw Error(ErrorCode::InvalidConfig, "config", e.what());
  }
  nlohmann::json j = nlohmann::json::parse(bytes.begin(), bytes.end(),
                                           nullptr, false);
  if (j.is_discarded())
    cli_detail::config_fail(path + " is not valid JSON");
  return parse_pipeline_config(j);
}

// Flag overrides land on top of whatever the config file set.
struct CliOverrides {
  std::optional<double> alpha;
  std::optional<double> radius_mm;
  std::optional<double> volume_threshold_mm3;
  std::optional<double> hu_cutoff;
  bool flip_x = false, flip_y = false, flip_z = false;
  std::optional<std::string> out_dir;
};

inline void apply_overrides(PipelineConfig& c, const CliOverrides& o) {
  if (o.alpha) c.roi.alpha = *o.alpha;
  if (o.radius_mm) c.roi.circle_radius_mm = *o.radius_mm;
  if (o.volume_threshold_mm3)
    c.roi.volume_threshold_mm3 = *o.volume_threshold_mm3;
  if (o.hu_cutoff) c.roi.hu_cutoff = *o.hu_cutoff;
  c.flip_x = c.flip_x || o.flip_x;
  c.flip_y = c.flip_y || o.flip_y;
  c.flip_z = c.flip_z || o.flip_z;
  if (o.out_dir) c.out_dir = *o.out_dir;
  try {
    validate(c.roi);
  } catch (Error& e) {
    throw Error(ErrorCode::InvalidConfig, "config", e.what());
  }
}

namespace cli_detail {

template <typename T>
inline void flip_axis(std::vector<T>& vox, const GridGeometry& g, int axis) {
  std::vector<T> out(vox.size());
  const std::int64_t n[3] = {g.dims[0], g.dims[1], g.dims[2]};
  for (std::int64_t z = 0; z < n[2]; ++z)
    for (std::int64_t y = 0; y < n[1]; ++y)
      for (std::int64_t x = 0; x < n[0]; ++x) {
        std::int64_t s[3] = {x, y, z};
        s[axis] = n[axis] - 1 - s[axis];
        out[static_cast<std::size_t>(g.index(x, y, z))] =
            vox[static_cast<std::size_t>(g.index(s[0], s[1], s[2]))];
      }
  vox = std::move(out);
}

template <typename GridObj>
inline void apply_flips(GridObj& obj, const PipelineConfig& c) {
  if (c.flip_x) flip_axis(obj.voxels, obj.geom, 0);
  if (c.flip_y) flip_axis(obj.voxels, obj.geom, 1);
  if (c.flip_z) flip_axis(obj.voxels, obj.geom, 2);
}

template <typename Fn>
auto stage(const char* name, Fn&& fn) {
  try {
    return fn();
  } catch (Error& e) {
    if (e.stage().empty()) e.set_stage(name);
    throw;
  }
}

inline int exit_code_for(const Error& e) {
  switch (e.code()) {
    case ErrorCode::InvalidConfig:
    case ErrorCode::InvalidSpec:
    case ErrorCode::IdMismatch:
      return 2;
    default:
      return 1;
  }
}

inline int report_error(const Error& e) {
  std::cerr << "alarm: error";
  if (!e.stage().empty()) std::cerr << " [" << e.stage() << "]";
  std::cerr << " " << error_code_name(e.code()) << ": " << e.what()
            << std::endl;
  return exit_code_for(e);
}

inline std::string report_path_for(const PipelineConfig& c,
                                   const std::string& volume_path) {
  return (std::filesystem::path(c.out_dir) /
          (input_stem(volume_path) + ".report.json"))
      .string();
}

inline void ensure_out_dir(const PipelineConfig& c) {
  std::error_code ec;
  std::filesystem::create_directories(c.out_dir, ec);
}

}  // namespace cli_detail

// Shared by measure and batch: load, flip, segment, measure.
inline MeasurementReport run_measurement(const std::string& volume_path,
                                         const std::string& mask_path,
                                         const PipelineConfig& cfg) {
  using cli_detail::stage;
  Volume v = stage("load", [&] {
    Volume vol = read_volume_auto(volume_path);
    cli_detail::apply_flips(vol, cfg);
    return vol;
  });

  SegmenterConfig sc = cfg.segmenter;
  if (!mask_path.empty()) {
    sc.source = SegmenterSource::MaskFile;
    sc.mask_path = mask_path;
  }
  Mask m = stage("segment", [&] {
    Mask mask = segment(v, sc);
    // A mask file is stored in the same orientation as the volume file, so
    // it gets the same manual flips; computed masks inherit them from v.
    if (sc.source == SegmenterSource::MaskFile)
      cli_detail::apply_flips(mask, cfg);
    return mask;
  });

  MeasureProvenance prov;
  prov.volume_path = volume_path;
  prov.mask_path = sc.source == SegmenterSource::MaskFile ? sc.mask_path : "";
  prov.segmenter = segmenter_source_name(sc.source);
  return measure(v, m, cfg.roi, prov);
}

namespace cli_detail {

inline CsvRow cohort_header() {
  return {"id",          "center_mean_hu",   "periphery_mean_hu",
          "whole_liver_mean_hu", "nafld_center", "nafld_periphery",
          "error"};
}

inline CsvRow cohort_row(const std::string& id, const MeasurementReport& r) {
  return {id,
          format_g6(r.center_roi.mean_hu),
          format_g6(r.mean_of_three_hu),
          format_g6(r.whole_liver_mean_hu),
          r.nafld_center ? "true" : "false",
          r.nafld_periphery ? "true" : "false",
          ""};
}

inline CsvRow cohort_error_row(const std::string& id, const Error& e) {
  std::string msg = std::string("[") +
                    (e.stage().empty() ? "pipeline" : e.stage()) + "] " +
                    error_code_name(e.code()) + ": " + e.what();
  return {id, "", "", "", "", "", msg};
}

// Table-style summary of the numeric cohort columns, emitted as CSV
// comment lines so downstream CSV readers skip it transparently.
inline std::string cohort_summary(
    const std::vector<std::pair<std::string, std::vector<double>>>& columns,
    double cutoff, std::int64_t n_scans, std::int64_t n_errors) {
  std::string out;
  out += "# summary: " + std::to_string(n_scans) + " scans, " +
         std::to_string(n_errors) + " errors, hu_cutoff " + format_g6(cutoff) +
         "\n";
  out += "# column,mean,sd,median,q25,q75,min,max,n_below_cutoff\n";
  for (const auto& [name, values] : columns) {
    if (values.empty()) continue;
    SeriesSummary s = summarize(values, cutoff);
    out += "# " + name + "," + format_g6(s.mean) + "," +
           (s.sd ? format_g6(*s.sd) : std::string()) + "," +
           format_g6(s.median) + "," + format_g6(s.q25) + "," +
           format_g6(s.q75) + "," + format_g6(s.min) + "," + format_g6(s.max) +
           "," + std::to_string(s.count_below_cutoff) + "\n";
  }
  return out;
}

}  // namespace cli_detail

inline int cmd_measure(const std::string& volume_path,
                       const std::string& mask_path, const PipelineConfig& cfg,
                       const std::string& csv_path = "") {
  try {
    MeasurementReport r = run_measurement(volume_path, mask_path, cfg);
    cli_detail::ensure_out_dir(cfg);
    const std::string out = cli_detail::report_path_for(cfg, volume_path);
    atomic_write_file(out, serialize_report(r));
    if (!csv_path.empty()) {
      const bool fresh = !std::filesystem::exists(csv_path);
      std::ofstream csv(csv_path, std::ios::app);
      if (!csv) fail(ErrorCode::IoFailure, "cannot open " + csv_path);
      if (fresh) csv << csv_line(cli_detail::cohort_header());
      csv << csv_line(
          cli_detail::cohort_row(input_stem(volume_path), r));
    }
    std::cout << input_stem(volume_path) << ": center "
              << format_g6(r.center_roi.mean_hu) << " HU, periphery "
              << format_g6(r.mean_of_three_hu) << " HU, whole liver "
              << format_g6(r.whole_liver_mean_hu) << " HU, steatosis "
              << (r.nafld_center ? "positive" : "negative") << "/center "
              << (r.nafld_periphery ? "positive" : "negative") << "/periphery"
              << "\n"
              << "report written to " << out << std::endl;
    return 0;
  } catch (const Error& e) {
    return cli_detail::report_error(e);
  } catch (const std::exception& e) {
    std::cerr << "alarm: error: " << e.what() << std::endl;
    return 1;
  }
}

struct BatchItem {
  std::string id;
  std::string volume_path;
  std::string mask_path;  // empty -> configured segmenter
};

inline std::vector<BatchItem> parse_manifest(const std::string& path) {
  std::vector<std::uint8_t> bytes;
  try {
    bytes = read_file(path);
  } catch (Error& e) {
    throw Error(ErrorCode::InvalidConfig, "manifest", e.what());
  }
  std::vector<CsvRow> rows =
      parse_csv(std::string(bytes.begin(), bytes.end()));
  if (rows.empty() || rows[0].size() < 2 || rows[0][0] != "id" ||
      rows[0][1] != "volume")
    throw Error(ErrorCode::InvalidConfig, "manifest",
                path + ": expected header id,volume,mask");
  std::vector<BatchItem> items;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const CsvRow& r = rows[i];
    if (r.size() < 2 || r[0].empty() || r[1].empty())
      throw Error(ErrorCode::InvalidConfig, "manifest",
                  path + ": row " + std::to_string(i + 1) +
                      " needs id and volume fields");
    items.push_back({r[0], r[1], r.size() > 2 ? r[2] : ""});
  }
  if (items.empty())
    throw Error(ErrorCode::InvalidConfig, "manifest",
                path + ": manifest has no entries");
  return items;
}

inline int cmd_batch(const std::string& manifest_path,
                     const PipelineConfig& cfg, int jobs = 0,
                     const std::string& out_csv = "") {
  try {
    std::vector<BatchItem> items = parse_manifest(manifest_path);

    struct Slot {
      bool ok = false;
      MeasurementReport report;
      Error error{ErrorCode::IoFailure, ""};
    };
    std::vector<Slot> slots(items.size());

    int n_workers = jobs > 0
                        ? jobs
                        : static_cast<int>(std::thread::hardware_concurrency());
    if (n_workers < 1) n_workers = 1;
    n_workers = std::min<int>(n_workers, static_cast<int>(items.size()));

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= items.size()) return;
        try {
          slots[i].report =
              run_measurement(items[i].volume_path, items[i].mask_path, cfg);
          slots[i].ok = true;
        } catch (const Error& e) {
          slots[i].error = e;
        } catch (const std::exception& e) {
          slots[i].error = Error(ErrorCode::IoFailure, "pipeline", e.what());
        }
      }
    };
    if (n_workers == 1) {
      worker();
    } else {
      std::vector<std::thread> pool;
      pool.reserve(static_cast<std::size_t>(n_workers));
      for (int t = 0; t < n_workers; ++t) pool.emplace_back(worker);
      for (std::thread& t : pool) t.join();
    }

    // Assemble in manifest order; concurrency never reorders output.
    std::string text = csv_line(cli_detail::cohort_header());
    std::vector<double> center, periphery, whole;
    std::int64_t n_errors = 0;
    for (std::size_t i = 0; i < items.size(); ++i) {
      if (slots[i].ok) {
        text += csv_line(cli_detail::cohort_row(items[i].id, slots[i].report));
        center.push_back(slots[i].report.center_roi.mean_hu);
        periphery.push_back(slots[i].report.mean_of_three_hu);
        whole.push_back(slots[i].report.whole_liver_mean_hu);
      } else {
        text += csv_line(cli_detail::cohort_error_row(items[i].id,
                                                      slots[i].error));
        ++n_errors;
      }
    }
    text += cli_detail::cohort_summary(
        {{"center_mean_hu", center},
         {"periphery_mean_hu", periphery},
         {"whole_liver_mean_hu", whole}},
        cfg.roi.hu_cutoff, static_cast<std::int64_t>(items.size()), n_errors);

    cli_detail::ensure_out_dir(cfg);
    const std::string out =
        out_csv.empty()
            ? (std::filesystem::path(cfg.out_dir) / "cohort.csv").string()
            : out_csv;
    atomic_write_file(out, text);
    std::cout << "measured " << (items.size() - static_cast<std::size_t>(n_errors))
              << "/" << items.size() << " scans, cohort table written to "
              << out << std::endl;
    return n_errors == 0 ? 0 : 1;
  } catch (const Error& e) {
    return cli_detail::report_error(e);
  } catch (const std::exception& e) {
    std::cerr << "alarm: error: " << e.what() << std::endl;
    return 1;
  }
}

namespace cli_detail {

struct NamedSeries {
  std::vector<std::string> ids;
  std::vector<double> values;
};

inline NamedSeries read_series_csv(const std::string& path,
                                   const std::string& column) {
  std::vector<std::uint8_t> bytes = read_file(path);
  std::vector<CsvRow> rows =
      parse_csv(std::string(bytes.begin(), bytes.end()));
  if (rows.empty())
    throw Error(ErrorCode::InvalidConfig, "agree", path + ": empty CSV");
  const std::int64_t id_col = csv_column(rows[0], "id");
  const std::int64_t val_col = csv_column(rows[0], column);
  if (id_col < 0 || val_col < 0)
    throw Error(ErrorCode::InvalidConfig, "agree",
                path + ": need columns \"id\" and \"" + column + "\"");
  NamedSeries s;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const CsvRow& r = rows[i];
    if (static_cast<std::int64_t>(r.size()) <= std::max(id_col, val_col))
      continue;  // short row (e.g. trailing junk)
    const std::string& raw = r[static_cast<std::size_t>(val_col)];
    if (raw.empty()) continue;  // error rows from a cohort table
    try {
      std::size_t used = 0;
      const double v = std::stod(raw, &used);
      if (used != raw.size()) throw std::invalid_argument(raw);
      s.values.push_back(v);
    } catch (const std::exception&) {
      fail(ErrorCode::IoFailure,
           path + ": non-numeric value \"" + raw + "\" in column " + column);
    }
    s.ids.push_back(r[static_cast<std::size_t>(id_col)]);
  }
  return s;
}

}  // namespace cli_detail

// Series A is the prediction arm, series B the reference arm.
inline int cmd_agree(const std::string& a_path, const std::string& b_path,
                     const PipelineConfig& cfg, const std::string& column,
                     const std::string& out_path) {
  try {
    cli_detail::NamedSeries a = cli_detail::read_series_csv(a_path, column);
    cli_detail::NamedSeries b = cli_detail::read_series_csv(b_path, column);

    std::unordered_map<std::string, double> b_by_id;
    for (std::size_t i = 0; i < b.ids.size(); ++i) {
      if (!b_by_id.emplace(b.ids[i], b.values[i]).second)
        throw Error(ErrorCode::IdMismatch, "agree",
                    b_path + ": duplicate id \"" + b.ids[i] + "\"");
    }
    std::vector<double> av, bv;
    for (std::size_t i = 0; i < a.ids.size(); ++i) {
      auto it = b_by_id.find(a.ids[i]);
      if (it == b_by_id.end())
        throw Error(ErrorCode::IdMismatch, "agree",
                    "id \"" + a.ids[i] + "\" is missing from " + b_path);
      av.push_back(a.values[i]);
      bv.push_back(it->second);
    }
    if (av.size() != b_by_id.size())
      throw Error(ErrorCode::IdMismatch, "agree",
                  "the two files do not cover the same ids");

    const double r = cli_detail::stage("agree", [&] { return pearson(av, bv); });
    const BlandAltman ba =
        cli_detail::stage("agree", [&] { return bland_altman(av, bv); });
    std::vector<bool> ca(av.size()), cb(bv.size());
    for (std::size_t i = 0; i < av.size(); ++i) {
      ca[i] = classify_steatosis(av[i], cfg.roi.hu_cutoff);
      cb[i] = classify_steatosis(bv[i], cfg.roi.hu_cutoff);
    }
    const ConfusionMatrix cm = build_confusion(ca, cb);
    const AgreementStats ks =
        cli_detail::stage("agree", [&] { return kappa_stats(cm); });

    JsonWriter w;
    w.begin_object();
    w.key("format");
    w.value("alarm-agreement-v1");
    w.key("n");
    w.value(static_cast<std::int64_t>(av.size()));
    w.key("hu_cutoff");
    w.value(cfg.roi.hu_cutoff);
    w.key("value_column");
    w.value(column);
    w.key("pearson_r");
    w.value(r);
    w.key("bland_altman");
    w.begin_object();
    w.key("bias");
    w.value(ba.bias);
    w.key("sd");
    w.value(ba.sd);
    w.key("loa_low");
    w.value(ba.loa_low);
    w.key("loa_high");
    w.value(ba.loa_high);
    w.end_object();
    w.key("confusion");
    w.begin_object();
    w.key("tp");
    w.value(cm.tp);
    w.key("fp");
    w.value(cm.fp);
    w.key("fn");
    w.value(cm.fn);
    w.key("tn");
    w.value(cm.tn);
    w.end_object();
    w.key("kappa");
    w.begin_object();
    w.key("kappa");
    w.value(ks.kappa);
    w.key("ci95_low");
    w.value(ks.ci_low);
    w.key("ci95_high");
    w.value(ks.ci_high);
    w.key("p_value");
    w.value(ks.p_value);
    w.key("agreement_pct");
    w.value(ks.agreement_pct);
    if (ks.sensitivity) {
      w.key("sensitivity_pct");
      w.value(100.0 * *ks.sensitivity);
    }
    if (ks.specificity) {
      w.key("specificity_pct");
      w.value(100.0 * *ks.specificity);
    }
    w.key("band");
    w.value(band_name(ks.band));
    w.end_object();
    w.end_object();
    {
      std::error_code ec;
      std::filesystem::create_directories(
          std::filesystem::path(out_path).parent_path(), ec);
    }
    atomic_write_file(out_path, w.str());

    std::cout << "n                 " << av.size() << "\n"
              << "pearson r         " << format_g6(r) << "\n"
              << "bland-altman      bias " << format_g6(ba.bias) << ", LoA ["
              << format_g6(ba.loa_low) << ", " << format_g6(ba.loa_high)
              << "]\n"
              << "confusion         tp " << cm.tp << " fp " << cm.fp << " fn "
              << cm.fn << " tn " << cm.tn << "\n"
              << "kappa             " << format_g6(ks.kappa) << " (95% CI "
              << format_g6(ks.ci_low) << " to " << format_g6(ks.ci_high)
              << ", p " << format_g6(ks.p_value) << ", " << band_name(ks.band)
              << ")\n"
              << "agreement         " << format_g6(ks.agreement_pct) << "%\n";
    if (ks.sensitivity)
      std::cout << "sensitivity       " << format_g6(100.0 * *ks.sensitivity)
                << "%\n";
    if (ks.specificity)
      std::cout << "specificity       " << format_g6(100.0 * *ks.specificity)
                << "%\n";
    std::cout << "stats written to  " << out_path << std::endl;
    return 0;
  } catch (const Error& e) {
    return cli_detail::report_error(e);
  } catch (const std::exception& e) {
    std::cerr << "alarm: error: " << e.what() << std::endl;
    return 1;
  }
}

inline int cmd_overlay(const std::string& volume_path,
                       const std::string& report_path,
                       const PipelineConfig& cfg,
                       const std::string& out_path = "") {
  try {
    Volume v = cli_detail::stage("load", [&] {
      Volume vol = read_volume_auto(volume_path);
      cli_detail::apply_flips(vol, cfg);
      return vol;
    });
    ReportOverlayData d = cli_detail::stage("load", [&] {
      std::vector<std::uint8_t> bytes = read_file(report_path);
      return parse_report_overlay_data(
          std::string(bytes.begin(), bytes.end()), report_path);
    });
    Volume v1 = cli_detail::stage("resample", [&] {
      return resample_isotropic(v, kIsoSpacingMm, Interpolation::Trilinear);
    });
    Image im = cli_detail::stage("render", [&] {
      return render_overlay(v1, d, cfg.overlay_window_low,
                            cfg.overlay_window_high);
    });
    cli_detail::ensure_out_dir(cfg);
    const std::string out =
        out_path.empty()
            ? (std::filesystem::path(cfg.out_dir) /
               (input_stem(volume_path) + ".overlay.ppm"))
                  .string()
            : out_path;
    atomic_write_file(out, ppm_bytes(im));
    std::cout << "overlay written to " << out << std::endl;
    return 0;
  } catch (const Error& e) {
    return cli_detail::report_error(e);
  } catch (const std::exception& e) {
    std::cerr << "alarm: error: " << e.what() << std::endl;
    return 1;
  }
}

inline PhantomSpec parse_phantom_spec(const nlohmann::json& j) {
  auto spec_fail = [](const std::string& msg) -> void {
    throw Error(ErrorCode::InvalidSpec, "phantom", msg);
  };
  if (!j.is_object()) spec_fail("phantom spec root must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& k = it.key();
    if (k != "dims" && k != "spacing_mm" && k != "origin_mm" &&
        k != "background_hu" && k != "liver" && k != "vessels" &&
        k != "noise_sigma_hu" && k != "seed")
      spec_fail("unknown key \"" + k + "\" in phantom spec");
  }
  auto vec3 = [&](const nlohmann::json& node, const char* what) {
    if (!node.is_array() || node.size() != 3 || !node[0].is_number() ||
        !node[1].is_number() || !node[2].is_number())
      spec_fail(std::string(what) + " must be a numeric 3-array");
    return Vec3d{node[0].get<double>(), node[1].get<double>(),
                 node[2].get<double>()};
  };

  PhantomSpec s;
  if (!j.contains("dims")) spec_fail("phantom spec needs dims");
  Vec3d dims = vec3(j["dims"], "dims");
  s.dims = {static_cast<std::int64_t>(dims.x),
            static_cast<std::int64_t>(dims.y),
            static_cast<std::int64_t>(dims.z)};
  if (j.contains("spacing_mm")) {
    Vec3d sp = vec3(j["spacing_mm"], "spacing_mm");
    s.spacing_mm = {sp.x, sp.y, sp.z};
  }
  if (j.contains("origin_mm")) {
    Vec3d og = vec3(j["origin_mm"], "origin_mm");
    s.origin_mm = {og.x, og.y, og.z};
  }
  if (j.contains("background_hu")) {
    if (!j["background_hu"].is_number())
      spec_fail("background_hu must be a number");
    s.background_hu = j["background_hu"].get<double>();
  }
  if (!j.contains("liver") || !j["liver"].is_object())
    spec_fail("phantom spec needs a liver object");
  const nlohmann::json& liver = j["liver"];
  for (auto it = liver.begin(); it != liver.end(); ++it)
    if (it.key() != "center_mm" && it.key() != "semi_axes_mm" &&
        it.key() != "hu")
      spec_fail("unknown key \"" + it.key() + "\" in liver spec");
  if (!liver.contains("center_mm") || !liver.contains("semi_axes_mm"))
    spec_fail("liver spec needs center_mm and semi_axes_mm");
  s.liver_center_mm = vec3(liver["center_mm"], "liver center_mm");
  s.liver_semi_axes_mm = vec3(liver["semi_axes_mm"], "liver semi_axes_mm");
  if (liver.contains("hu")) {
    if (!liver["hu"].is_number()) spec_fail("liver hu must be a number");
    s.liver_hu = liver["hu"].get<double>();
  }
  if (j.contains("vessels")) {
    if (!j["vessels"].is_array()) spec_fail("vessels must be an array");
    for (const auto& vj : j["vessels"]) {
      if (!vj.is_object()) spec_fail("each vessel must be an object");
      for (auto it = vj.begin(); it != vj.end(); ++it)
        if (it.key() != "from_mm" && it.key() != "to_mm" &&
            it.key() != "radius_mm" && it.key() != "hu")
          spec_fail("unknown key \"" + it.key() + "\" in vessel spec");
      VesselSpec v;
      if (!vj.contains("from_mm") || !vj.contains("to_mm") ||
          !vj.contains("radius_mm") || !vj.contains("hu"))
        spec_fail("vessel spec needs from_mm, to_mm, radius_mm, hu");
      v.from_mm = vec3(vj["from_mm"], "vessel from_mm");
      v.to_mm = vec3(vj["to_mm"], "vessel to_mm");
      if (!vj["radius_mm"].is_number() || !vj["hu"].is_number())
        spec_fail("vessel radius_mm and hu must be numbers");
      v.radius_mm = vj["radius_mm"].get<double>();
      v.hu = vj["hu"].get<double>();
      s.vessels.push_back(v);
    }
  }
  if (j.contains("noise_sigma_hu")) {
    if (!j["noise_sigma_hu"].is_number())
      spec_fail("noise_sigma_hu must be a number");
    s.noise_sigma_hu = j["noise_sigma_hu"].get<double>();
  }
  if (j.contains("seed")) {
    if (!j["seed"].is_number_integer()) spec_fail("seed must be an integer");
    s.seed = j["seed"].get<std::uint64_t>();
  }
  try {
    validate(s);
  } catch (Error& e) {
    throw Error(ErrorCode::InvalidSpec, "phantom", e.what());
  }
  return s;
}

namespace cli_detail {

inline std::string serialize_phantom_truth(const PhantomSpec& s,
                                           const PhantomTruth& t) {
  JsonWriter w;
  w.begin_object();
  w.key("format");
  w.value("alarm-phantom-truth-v1");
  w.key("spec");
  w.begin_object();
  w.key("dims");
  w.value(std::vector<double>{static_cast<double>(s.dims[0]),
                              static_cast<double>(s.dims[1]),
                              static_cast<double>(s.dims[2])});
  w.key("spacing_mm");
  w.value(std::vector<double>{s.spacing_mm[0], s.spacing_mm[1],
                              s.spacing_mm[2]});
  w.key("origin_mm");
  w.value(std::vector<double>{s.origin_mm[0], s.origin_mm[1], s.origin_mm[2]});
  w.key("background_hu");
  w.value(s.background_hu);
  w.key("liver_center_mm");
  w.value(std::vector<double>{s.liver_center_mm.x, s.liver_center_mm.y,
                              s.liver_center_mm.z});
  w.key("liver_semi_axes_mm");
  w.value(std::vector<double>{s.liver_semi_axes_mm.x, s.liver_semi_axes_mm.y,
                              s.liver_semi_axes_mm.z});
  w.key("liver_hu");
  w.value(s.liver_hu);
  w.key("vessel_count");
  w.value(static_cast<std::int64_t>(s.vessels.size()));
  w.key("noise_sigma_hu");
  w.value(s.noise_sigma_hu);
  w.key("seed");
  w.value(static_cast<std::int64_t>(s.seed));
  w.end_object();
  w.key("voxel_counts");
  w.begin_object();
  w.key("background");
  w.value(t.background_voxels);
  w.key("liver");
  w.value(t.liver_voxels);
  w.key("vessel");
  w.value(t.vessel_voxels);
  w.end_object();
  w.key("mask_volume_mm3");
  w.value(t.mask_volume_mm3);
  w.key("analytic_ellipsoid_mm3");
  w.value(t.analytic_ellipsoid_mm3);
  w.key("noise_algorithm");
  w.value(t.noise_algorithm);
  w.end_object();
  return w.str();
}

}  // namespace cli_detail

inline int cmd_phantom(const std::string& spec_path,
                       const PipelineConfig& cfg) {
  try {
    std::vector<std::uint8_t> bytes;
    try {
      bytes = read_file(spec_path);
    } catch (Error& e) {
      throw Error(ErrorCode::InvalidSpec, "phantom", e.what());
    }
    nlohmann::json j = nlohmann::json::parse(bytes.begin(), bytes.end(),
                                             nullptr, false);
    if (j.is_discarded())
      throw Error(ErrorCode::InvalidSpec, "phantom",
                  spec_path + " is not valid JSON");
    PhantomSpec spec = parse_phantom_spec(j);
    Phantom p = cli_detail::stage("phantom", [&] { return generate(spec); });

    cli_detail::ensure_out_dir(cfg);
    namespace fs = std::filesystem;
    const std::string vol_path = (fs::path(cfg.out_dir) / "volume.nii").string();
    const std::string mask_path = (fs::path(cfg.out_dir) / "mask.nii").string();
    const std::string truth_path = (fs::path(cfg.out_dir) / "truth.json").string();
    write_nifti(p.volume, vol_path);
    write_nifti(p.mask, mask_path);
    atomic_write_file(truth_path,
                      cli_detail::serialize_phantom_truth(spec, p.truth));
    std::cout << "phantom written: " << vol_path << ", " << mask_path << ", "
              << truth_path << std::endl;
    return 0;
  } catch (const Error& e) {
    return cli_detail::report_error(e);
  } catch (const std::exception& e) {
    std::cerr << "alarm: error: " << e.what() << std::endl;
    return 1;
  }
}

}  // namespace alarmkit
