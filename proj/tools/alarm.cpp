// alarm: automatic liver attenuation measurement from CT.
//
//   alarm measure <volume> [mask]   one scan -> <stem>.report.json
//   alarm batch <manifest>          many scans -> cohort CSV
//   alarm agree <a.csv> <b.csv>     agreement statistics between two arms
//   alarm overlay <volume> <report> QA image (P6 PPM)
//   alarm phantom <spec.json>       synthetic volume + mask + truth
//
// Exit codes: 0 ok, 1 pipeline error, 2 configuration/usage error.

#include <filesystem>
#include <string>

#include <CLI11.hpp>

#include "alarm/cli.hpp"

namespace {

struct CommonOpts {
  std::string config_path;
  alarmkit::CliOverrides ov;
};

void add_common(CLI::App* cmd, CommonOpts& c) {
  cmd->add_option("--config", c.config_path, "pipeline config JSON file");
  cmd->add_option("--alpha", c.ov.alpha,
                  "fractional ray position of the posterior circle (0..1)");
  cmd->add_option("--radius-mm", c.ov.radius_mm,
                  "periphery circle radius in mm");
  cmd->add_option("--volume-threshold-mm3", c.ov.volume_threshold_mm3,
                  "center region stopping volume in mm^3");
  cmd->add_option("--hu-cutoff", c.ov.hu_cutoff,
                  "steatosis threshold: positive when mean HU < cutoff");
  cmd->add_flag("--flip-x", c.ov.flip_x, "mirror the x axis after loading");
  cmd->add_flag("--flip-y", c.ov.flip_y, "mirror the y axis after loading");
  cmd->add_flag("--flip-z", c.ov.flip_z, "mirror the z axis after loading");
  cmd->add_option("--out", c.ov.out_dir, "output directory (default: .)");
}

alarmkit::PipelineConfig resolve(const CommonOpts& c) {
  alarmkit::PipelineConfig cfg = c.config_path.empty()
                                  ? alarmkit::PipelineConfig{}
                                  : alarmkit::load_pipeline_config(c.config_path);
  alarmkit::apply_overrides(cfg, c.ov);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"automatic liver attenuation measurement from CT"};
  app.require_subcommand(1);

  CommonOpts m_c;
  std::string m_volume, m_mask, m_csv;
  CLI::App* measure =
      app.add_subcommand("measure", "measure one scan into a JSON report");
  add_common(measure, m_c);
  measure
      ->add_option("volume", m_volume,
                   "CT volume (.nii, .nii.gz, .hdr or raw sidecar JSON)")
      ->required();
  measure->add_option(
      "mask", m_mask, "liver mask file; omit to use the configured segmenter");
  measure->add_option("--csv", m_csv,
                      "also append a cohort-style row to this CSV");

  CommonOpts b_c;
  std::string b_manifest, b_csv;
  int b_jobs = 0;
  CLI::App* batch =
      app.add_subcommand("batch", "measure a manifest of scans into a cohort table");
  add_common(batch, b_c);
  batch->add_option("manifest", b_manifest, "CSV with header id,volume,mask")
      ->required();
  batch->add_option("--jobs", b_jobs,
                    "worker threads (default: hardware concurrency)");
  batch->add_option("--csv", b_csv,
                    "cohort CSV path (default: <out>/cohort.csv)");

  CommonOpts g_c;
  std::string g_a, g_b, g_column = "hu";
  CLI::App* agree = app.add_subcommand(
      "agree", "agreement statistics between two measurement CSVs");
  add_common(agree, g_c);
  agree->add_option("a", g_a, "prediction arm CSV (id + value columns)")
      ->required();
  agree->add_option("b", g_b, "reference arm CSV")->required();
  agree->add_option("--column", g_column,
                    "value column to compare (default: hu)");

  CommonOpts o_c;
  std::string o_volume, o_report, o_out;
  CLI::App* overlay =
      app.add_subcommand("overlay", "render the QA overlay image for a report");
  add_common(overlay, o_c);
  overlay->add_option("volume", o_volume, "CT volume the report came from")
      ->required();
  overlay->add_option("report", o_report, "measurement report JSON")
      ->required();
  overlay->add_option("image", o_out,
                      "output PPM path (default: <out>/<stem>.overlay.ppm)");

  CommonOpts p_c;
  std::string p_spec;
  CLI::App* phantom = app.add_subcommand(
      "phantom", "generate a synthetic CT volume with a known liver");
  add_common(phantom, p_c);
  phantom->add_option("spec", p_spec, "phantom spec JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (app.got_subcommand(measure))
      return alarmkit::cmd_measure(m_volume, m_mask, resolve(m_c), m_csv);
    if (app.got_subcommand(batch))
      return alarmkit::cmd_batch(b_manifest, resolve(b_c), b_jobs, b_csv);
    if (app.got_subcommand(agree)) {
      alarmkit::PipelineConfig cfg = resolve(g_c);
      const std::string out =
          (std::filesystem::path(cfg.out_dir) / "agreement.json").string();
      return alarmkit::cmd_agree(g_a, g_b, cfg, g_column, out);
    }
    if (app.got_subcommand(overlay))
      return alarmkit::cmd_overlay(o_volume, o_report, resolve(o_c), o_out);
    if (app.got_subcommand(phantom))
      return alarmkit::cmd_phantom(p_spec, resolve(p_c));
  } catch (const alarmkit::Error& e) {
    return alarmkit::cli_detail::report_error(e);
  }
  return 2;
}
