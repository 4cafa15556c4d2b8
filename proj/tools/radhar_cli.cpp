// radhar: command-line front end for the radar activity-recognition pipeline.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "radhar/augment.hpp"
#include "radhar/core/parallel.hpp"
#include "radhar/domain_maps.hpp"
#include "radhar/nn/audit.hpp"
#include "radhar/nn/checkpoint.hpp"
#include "radhar/nn/gradcheck.hpp"
#include "radhar/radar_io.hpp"
#include "radhar/spectro_map.hpp"
#include "radhar/synth.hpp"
#include "radhar/train/toy_run.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace radhar;

namespace {

constexpr const char* kToolVersion = "radhar 0.1.0";

enum Exit { kOk = 0, kInputError = 2, kVerificationFailed = 3, kInternalError = 4 };

struct VerificationFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

/// Provenance record written next to every command's outputs.
struct RunManifest {
  std::string command;
  std::vector<std::string> argv;
  json config = json::object();
  json seeds = json::object();
  std::vector<std::string> inputs, outputs;
  json result = json::object();
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

  json to_json() const {
    return {{"command", command},
            {"argv", argv},
            {"tool_version", kToolVersion},
            {"config", config},
            {"config_hash", hex64(nn::name_hash(config.dump()))},
            {"seeds", seeds},
            {"inputs", inputs},
            {"outputs", outputs},
            {"threads", worker_count()},
            {"wall_time_s", std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()},
            {"result", result}};
  }
};

void write_text(RunManifest& m, const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), Errc::Io, "cannot write " + path.string());
  out << text;
  m.outputs.push_back(path.string());
}

json read_json_file(const fs::path& path) {
  const auto bytes = read_bytes(path);
  try {
    return json::parse(bytes.begin(), bytes.end());
  } catch (const json::exception& e) {
    throw Error(Errc::MalformedEntry, path.string() + ": " + e.what());
  }
}

/// Manifest location: inside an output directory, or beside an output file
/// with the same stem.
void emit_manifest(RunManifest& m, const fs::path& path) {
  m.outputs.push_back(path.string());
  std::ofstream(path) << m.to_json().dump(2) << "\n";
}

void print_table_row(const std::vector<std::string>& cells, const std::vector<int>& widths) {
  for (std::size_t i = 0; i < cells.size(); ++i)
    std::cout << (i ? "  " : "") << std::setw(widths[i]) << (i == 0 ? std::left : std::right) << cells[i];
  std::cout << std::right << "\n";
}

std::string fmt_millions(double v) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(3) << v / 1e6 << "M";
  return os.str();
}

std::string fmt_pct(double v) {
  std::ostringstream os;
  os << std::showpos << std::fixed << std::setprecision(2) << 100.0 * v << "%";
  return os.str();
}

// parse --------------------------------------------------------------------

int cmd_parse(const fs::path& in, const fs::path& out, RunManifest& m) {
  m.inputs.push_back(in.string());
  const ParseResult r = read_recording(in);
  const EchoMatrix& e = r.echo;
  const json summary = {{"params", to_json(e.params)},
                        {"chirps", e.chirps()},
                        {"samples_per_chirp", e.samples()},
                        {"discarded_entries", r.discarded_entries},
                        {"duration_s", static_cast<double>(e.chirps()) * e.params.chirp_duration_s},
                        {"range_resolution_m", e.params.range_resolution_m()},
                        {"wavelength_m", e.params.wavelength_m()},
                        {"prf_hz", e.params.prf_hz()}};
  std::cout << summary.dump(2) << "\n";
  m.result = summary;
  if (out.empty()) return kOk;
  fs::create_directories(out);
  write_text(m, out / "header.json", summary.dump(2) + "\n");
  for (int part = 0; part < 2; ++part) {
    SpectroMap map;
    map.domain = Domain::Echo;
    map.params = e.params;
    map.row_axis = {"time", "s", 0.0, e.params.chirp_duration_s};
    map.col_axis = {"fast_time", "s", 0.0, 1.0 / e.params.sample_rate_hz()};
    map.values = Matrix<double>(e.chirps(), e.samples());
    for (std::size_t i = 0; i < e.data.size(); ++i)
      map.values.values()[i] = part == 0 ? e.data.values()[i].real() : e.data.values()[i].imag();
    const fs::path p = out / (part == 0 ? "echo_re.smap" : "echo_im.smap");
    save_smap(p, map);
    m.outputs.push_back(p.string());
    m.outputs.push_back(sidecar_path(p).string());
  }
  emit_manifest(m, out / "manifest.json");
  return kOk;
}

// synth --------------------------------------------------------------------

int cmd_synth(const std::string& kind, const fs::path& scene_file, std::uint64_t seed, const fs::path& out,
              RunManifest& m) {
  synth::Scene scene;
  if (!scene_file.empty()) {
    m.inputs.push_back(scene_file.string());
    scene = synth::scene_from_json(read_json_file(scene_file));
  } else {
    scene = synth::activity_template(synth::activity_from_string(kind), seed);
  }
  const RadarParams params = nominal_params();
  const EchoMatrix echo = synth::generate(scene, params);
  m.config = {{"kind", scene_file.empty() ? kind : "scene"}, {"scene", synth::to_json(scene)}, {"params", to_json(params)}};
  m.seeds = {{"template", seed}, {"noise", scene.seed}};
  if (!out.parent_path().empty()) fs::create_directories(out.parent_path());
  write_recording(out, echo);
  m.outputs.push_back(out.string());
  fs::path scene_path = out;
  scene_path.replace_extension(".scene.json");
  write_text(m, scene_path, synth::to_json(scene).dump(2) + "\n");
  m.result = {{"chirps", echo.chirps()}, {"samples_per_chirp", echo.samples()}};
  fs::path manifest = out;
  manifest.replace_extension(".manifest.json");
  emit_manifest(m, manifest);
  std::cout << "wrote " << out.string() << " (" << echo.chirps() << " chirps x " << echo.samples() << " samples)\n";
  return kOk;
}

// maps ---------------------------------------------------------------------

int cmd_maps(const fs::path& in, const std::string& domains, const fs::path& out, bool pgm, bool mti,
             std::size_t resize, RunManifest& m) {
  m.inputs.push_back(in.string());
  const EchoMatrix echo = read_recording(in).echo;
  std::vector<std::string> wanted;
  std::stringstream ss(domains);
  for (std::string d; std::getline(ss, d, ',');)
    if (!d.empty()) wanted.push_back(d);
  require(!wanted.empty(), Errc::InvalidConfig, "no domains requested");
  m.config = {{"domains", wanted}, {"mti", mti}, {"resize", resize}, {"pgm", pgm}};
  fs::create_directories(out);
  json produced = json::array();
  for (const auto& name : wanted) {
    const Domain d = domain_from_string(name);
    SpectroMap map;
    std::string stem;
    switch (d) {
      case Domain::RangeTime: map = maps::range_time_map(echo, mti); stem = "rt"; break;
      case Domain::DopplerTime: map = maps::doppler_time_map(echo, maps::AstftConfig::defaults(echo.params)); stem = "dt"; break;
      case Domain::RangeDoppler: map = maps::range_doppler_map(echo, mti); stem = "rd"; break;
      case Domain::Echo: throw Error(Errc::InvalidConfig, "echo is not a map domain");
    }
    if (resize > 0) map = maps::resize_bilinear(map, resize, resize);
    const fs::path p = out / (stem + ".smap");
    save_smap(p, map);
    m.outputs.push_back(p.string());
    m.outputs.push_back(sidecar_path(p).string());
    if (pgm) {
      const fs::path q = out / (stem + ".pgm");
      write_pgm(q, map);
      m.outputs.push_back(q.string());
    }
    produced.push_back({{"domain", to_string(d)}, {"rows", map.rows()}, {"cols", map.cols()}, {"file", p.string()}});
    std::cout << to_string(d) << ": " << map.rows() << " x " << map.cols() << " -> " << p.string() << "\n";
  }
  m.result = {{"maps", produced}};
  emit_manifest(m, out / "manifest.json");
  return kOk;
}

// augment ------------------------------------------------------------------

int cmd_augment(const fs::path& in, const fs::path& policy_file, std::optional<std::uint64_t> seed, const fs::path& out,
                bool pgm, RunManifest& m) {
  m.inputs.push_back(in.string());
  augment::AugmentPolicy policy;
  if (!policy_file.empty()) {
    m.inputs.push_back(policy_file.string());
    policy = augment::policy_from_json(read_json_file(policy_file));
  }
  if (seed) policy.seed = *seed;
  policy.validate();
  const SpectroMap map = load_smap(in);
  const SpectroMap aug = augment::inject(map, policy);
  const auto regions = augment::segment_regions(map, policy);
  std::size_t counts[3] = {0, 0, 0};
  for (auto r : regions.values()) ++counts[static_cast<int>(r)];
  m.config = {{"policy", augment::to_json(policy)}};
  m.seeds = {{"noise", policy.seed}};
  m.result = {{"low", counts[0]}, {"mid", counts[1]}, {"high", counts[2]}};
  if (!out.parent_path().empty()) fs::create_directories(out.parent_path());
  save_smap(out, aug);
  m.outputs.push_back(out.string());
  m.outputs.push_back(sidecar_path(out).string());
  if (pgm) {
    fs::path q = out;
    q.replace_extension(".pgm");
    write_pgm(q, aug);
    m.outputs.push_back(q.string());
  }
  fs::path manifest = out;
  manifest.replace_extension(".manifest.json");
  emit_manifest(m, manifest);
  std::cout << "pixels low/mid/high: " << counts[0] << "/" << counts[1] << "/" << counts[2] << " -> " << out.string()
            << "\n";
  return kOk;
}

// train-toy ----------------------------------------------------------------

int cmd_train_toy(const fs::path& config_file, const fs::path& out, std::optional<std::size_t> epochs,
                  std::optional<double> require_accuracy, RunManifest& m) {
  train::ToyRunConfig cfg;
  if (!config_file.empty()) {
    m.inputs.push_back(config_file.string());
    cfg = train::toy_run_config_from_json(read_json_file(config_file));
  }
  if (epochs) {
    cfg.train.epochs = *epochs;
    cfg.train.validate();
  }
  m.config = train::to_json(cfg);
  m.seeds = {{"dataset", cfg.data.seed}, {"model", cfg.model_seed}, {"train", cfg.train.seed}};
  std::cout << "building " << cfg.data.per_class * synth::kActivities.size() << " samples at " << cfg.data.map_size
            << "x" << cfg.data.map_size << "\n";
  auto run = train::run_toy(cfg, [](const train::EpochRecord& r) {
    std::printf("epoch %3zu  lr %.1e  loss %.4f  train_acc %.3f  val_acc %.3f  (%.2fs)\n", r.epoch, r.lr, r.loss,
                r.train_accuracy, r.val_accuracy, r.seconds);
    std::fflush(stdout);
  });
  m.result = train::write_toy_run(out, cfg, run);
  for (const auto& e : fs::recursive_directory_iterator(out))
    if (e.is_regular_file()) m.outputs.push_back(e.path().string());
  emit_manifest(m, out / "manifest.json");
  const double acc = run.result.train.overall_accuracy;
  std::printf("final accuracy train %.3f  val %.3f  test %.3f\n", acc, run.result.val.overall_accuracy,
              run.result.test.overall_accuracy);
  if (require_accuracy && acc < *require_accuracy)
    throw VerificationFailure("training accuracy " + std::to_string(acc) + " below required " +
                              std::to_string(*require_accuracy));
  return kOk;
}

// eval ---------------------------------------------------------------------

int cmd_eval(const fs::path& ckpt, const fs::path& data, const std::string& split, const fs::path& out,
             RunManifest& m) {
  m.inputs = {ckpt.string(), data.string()};
  auto model = nn::load_checkpoint<float>(ckpt);
  const train::Dataset ds = train::load_dataset(data);
  std::vector<std::size_t> idx;
  if (split == "all") {
    for (std::size_t i = 0; i < ds.size(); ++i) idx.push_back(i);
  } else {
    const json s = read_json_file(data / "split.json");
    require(s.contains(split), Errc::InvalidConfig, "split.json has no '" + split + "' entry");
    idx = s.at(split).get<std::vector<std::size_t>>();
    for (auto i : idx) require(i < ds.size(), Errc::MalformedEntry, "split index out of range");
  }
  const auto report = train::evaluate(model, ds, idx);
  m.config = {{"split", split}};
  m.result = train::to_json(report);
  const std::string metrics = train::metrics_csv(report, ds.class_names);
  const std::string confusion = train::confusion_csv(report, ds.class_names);
  std::cout << metrics << "\n" << confusion;
  if (!out.empty()) {
    fs::create_directories(out);
    write_text(m, out / "metrics.csv", metrics);
    write_text(m, out / "confusion.csv", confusion);
    emit_manifest(m, out / "manifest.json");
  }
  return kOk;
}

// params -------------------------------------------------------------------

void print_audit(const nn::Audit& a, bool detail) {
  const std::vector<int> w = {22, 14, 14, 16, 18};
  print_table_row({"module", "trainable", "bn_stats", "macs", "out_shape"}, w);
  auto row = [&](const nn::ModuleCount& c) {
    print_table_row({c.name, std::to_string(c.trainable), std::to_string(c.non_trainable), std::to_string(c.macs),
                     nn::shape_string(c.out_shape)},
                    w);
  };
  if (detail)
    for (const auto& c : a.detail) row(c);
  for (const auto& c : a.modules) row(c);
  const auto t = a.totals();
  print_table_row({"TOTAL", std::to_string(t.trainable), std::to_string(t.non_trainable), std::to_string(t.macs), ""},
                  w);
}

int cmd_params(const std::string& preset_name, const std::string& rule, std::size_t input, bool as_json,
               const fs::path& out, RunManifest& m) {
  nn::ModelConfig cfg = nn::preset(preset_name);
  if (!rule.empty()) cfg.lstm_rule = nn::lstm_rule_from_string(rule);
  if (input > 0) cfg.input_size = input;
  m.config = nn::to_json(cfg);
  const nn::Audit audit = nn::audit_network(cfg, cfg.input_size);
  const bool reference = preset_name == "b0" || preset_name == "table1_literal";
  json result = {{"audit", nn::to_json(audit)}};
  std::optional<nn::Reconciliation> rec;
  if (reference) {
    rec = nn::reconcile(cfg);
    result["reconciliation"] = {
        {"reference_params", nn::kReferenceParams},
        {"reference_macs", nn::kReferenceMacs},
        {"hxc", {{"trainable", rec->hxc.totals().trainable}, {"total", rec->hxc.totals().total()},
                 {"macs", rec->hxc.totals().macs}, {"param_delta", rec->hxc_param_delta},
                 {"total_delta", rec->hxc_total_delta}, {"mac_delta", rec->hxc_mac_delta}}},
        {"c_only", {{"trainable", rec->c_only.totals().trainable}, {"total", rec->c_only.totals().total()},
                    {"macs", rec->c_only.totals().macs}, {"param_delta", rec->c_only_param_delta},
                    {"total_delta", rec->c_only_total_delta}, {"mac_delta", rec->c_only_mac_delta}}},
        {"within_20pct", rec->params_ok},
        {"baseline", {{"trainable", rec->baseline.totals().trainable}, {"total", rec->baseline.totals().total()},
                      {"reference_trainable", nn::kReferenceBaselineTrainable},
                      {"reference_total", nn::kReferenceBaselineTotal}, {"delta", rec->baseline_delta},
                      {"within_2pct", rec->baseline_ok}, {"audit", nn::to_json(rec->baseline)}}}};
  }
  m.result = result;
  if (as_json) {
    std::cout << result.dump(2) << "\n";
  } else {
    std::cout << "preset " << cfg.preset << ", lstm_feature_dim_rule " << nn::to_string(cfg.lstm_rule) << ", input "
              << cfg.input_size << "x" << cfg.input_size << "\n"
              << "MACs count multiply-accumulates of conv/linear/LSTM layers; elementwise work is excluded.\n\n";
    print_audit(audit, true);
    if (rec) {
      std::cout << "\nreconciliation against " << fmt_millions(nn::kReferenceParams) << " params / "
                << fmt_millions(nn::kReferenceMacs) << " FLOPs:\n";
      const std::vector<int> w = {10, 14, 10, 16, 10, 16, 10};
      print_table_row({"rule", "trainable", "delta", "with_bn_stats", "delta", "macs", "delta"}, w);
      for (const auto& [name, a, dp, dt, dm] :
           {std::tuple{"hxc", &rec->hxc, rec->hxc_param_delta, rec->hxc_total_delta, rec->hxc_mac_delta},
            std::tuple{"c", &rec->c_only, rec->c_only_param_delta, rec->c_only_total_delta, rec->c_only_mac_delta}}) {
        const auto t = a->totals();
        print_table_row({name, fmt_millions(static_cast<double>(t.trainable)), fmt_pct(dp),
                         fmt_millions(static_cast<double>(t.total())), fmt_pct(dt),
                         fmt_millions(static_cast<double>(t.macs)), fmt_pct(dm)},
                        w);
      }
      std::cout << "either rule within 20% of the reference: " << (rec->params_ok ? "yes" : "no") << "\n";
      const auto b = rec->baseline.totals();
      std::cout << "\nsingle-branch squeeze-excitation baseline (1000 classes): " << b.trainable << " trainable ("
                << fmt_millions(static_cast<double>(b.trainable)) << ", " << fmt_pct(rec->baseline_delta) << " vs "
                << fmt_millions(nn::kReferenceBaselineTrainable) << "), " << b.total() << " total ("
                << fmt_millions(static_cast<double>(b.total())) << " vs "
                << fmt_millions(nn::kReferenceBaselineTotal) << ")\n";
    }
  }
  if (!out.empty()) {
    fs::create_directories(out);
    write_text(m, out / "params.json", result.dump(2) + "\n");
    emit_manifest(m, out / "manifest.json");
  }
  if (preset_name == "b0" && rec && (!rec->params_ok || !rec->baseline_ok))
    throw VerificationFailure("parameter audit outside tolerance");
  return kOk;
}

// gradcheck ----------------------------------------------------------------

int cmd_gradcheck(const std::string& module, bool as_json, const fs::path& out, RunManifest& m) {
  const auto modules = nn::select_gradcheck_modules(module);
  const nn::GradCheckOptions opt;
  m.config = {{"modules", modules}, {"eps", opt.eps}, {"tolerance", opt.tolerance}, {"floor", opt.floor}};
  m.seeds = {{"gradcheck", opt.seed}};
  json rows = json::array();
  bool all_ok = true;
  const std::vector<int> w = {16, 14, 9, 6, 28};
  if (!as_json) print_table_row({"module", "max_rel_err", "entries", "pass", "worst"}, w);
  for (const auto& name : modules) {
    const auto r = nn::run_gradcheck(name, opt);
    all_ok = all_ok && r.passed;
    rows.push_back({{"module", r.module}, {"max_rel_error", r.max_rel_error}, {"entries", r.entries},
                    {"passed", r.passed}, {"worst", r.worst}});
    if (!as_json) {
      std::ostringstream e;
      e << std::scientific << std::setprecision(3) << r.max_rel_error;
      print_table_row({r.module, e.str(), std::to_string(r.entries), r.passed ? "PASS" : "FAIL", r.worst}, w);
      std::cout.flush();
    }
  }
  m.result = {{"results", rows}, {"all_passed", all_ok}};
  if (as_json) std::cout << m.result.dump(2) << "\n";
  if (!out.empty()) {
    fs::create_directories(out);
    write_text(m, out / "gradcheck.json", m.result.dump(2) + "\n");
    emit_manifest(m, out / "manifest.json");
  }
  if (!all_ok) throw VerificationFailure("gradient check failed");
  return kOk;
}

void report_error(bool as_json, int code, const std::string& kind, const std::string& message) {
  if (as_json)
    std::cerr << json{{"error", {{"exit_code", code}, {"kind", kind}, {"message", message}}}}.dump() << "\n";
  else
    std::cerr << "error (" << kind << "): " << message << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  bool as_json = false;
  for (int i = 1; i < argc; ++i)
    if (std::string(argv[i]) == "--json") as_json = true;

  CLI::App app{"FMCW radar activity-recognition pipeline"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);
  app.fallthrough();
  app.add_flag("--json", as_json, "machine-readable output; errors as JSON on stderr");

  RunManifest manifest;
  for (int i = 0; i < argc; ++i) manifest.argv.emplace_back(argv[i]);

  std::string in, out, domains = "rt,dt,rd", kind = "walk", scene, policy, config, ckpt, data, split = "all";
  std::string preset_name = "b0", rule, module = "all";
  std::uint64_t seed = 0;
  std::optional<std::uint64_t> aug_seed;
  std::optional<std::size_t> epochs;
  std::optional<double> require_acc;
  std::size_t resize = 0, input = 0;
  bool pgm = false, no_mti = false;

  auto* parse = app.add_subcommand("parse", "parse a .dat/.datb recording and dump its header and echo");
  parse->add_option("input", in, "recording (.dat ASCII or .datb binary)")->required();
  parse->add_option("--out", out, "output directory");

  auto* synth_cmd = app.add_subcommand("synth", "render an activity template (or a scene JSON) to a recording");
  synth_cmd->add_option("--kind", kind, "walk|sit|stand|pick|drink|fall");
  synth_cmd->add_option("--scene", scene, "scene JSON instead of a template");
  synth_cmd->add_option("--seed", seed, "template seed");
  synth_cmd->add_option("--out", out, "output recording (.dat or .datb)")->required();

  auto* maps_cmd = app.add_subcommand("maps", "compute range-time, Doppler-time and range-Doppler maps");
  maps_cmd->add_option("input", in, "recording")->required();
  maps_cmd->add_option("--domains", domains, "comma list of rt,dt,rd");
  maps_cmd->add_option("--out", out, "output directory")->required();
  maps_cmd->add_flag("--pgm", pgm, "also write 8-bit previews");
  maps_cmd->add_flag("--no-mti", no_mti, "disable clutter suppression for rt and rd");
  maps_cmd->add_option("--resize", resize, "bilinear resize to N x N");

  auto* aug_cmd = app.add_subcommand("augment", "inject region-dependent noise into a map");
  aug_cmd->add_option("input", in, "input .smap")->required();
  aug_cmd->add_option("--policy", policy, "policy JSON");
  aug_cmd->add_option("--seed", aug_seed, "noise seed (overrides the policy)");
  aug_cmd->add_option("--out", out, "output .smap")->required();
  aug_cmd->add_flag("--pgm", pgm, "also write an 8-bit preview");

  auto* train_cmd = app.add_subcommand("train-toy", "train the toy network on synthetic activities");
  train_cmd->add_option("--config", config, "run config JSON");
  train_cmd->add_option("--out", out, "run directory")->required();
  train_cmd->add_option("--epochs", epochs, "override the epoch count");
  train_cmd->add_option("--require-accuracy", require_acc, "exit 3 if final training accuracy is lower");

  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on a saved dataset");
  eval_cmd->add_option("--ckpt", ckpt, "checkpoint directory")->required();
  eval_cmd->add_option("--data", data, "dataset directory")->required();
  eval_cmd->add_option("--split", split, "all|train|val|test");
  eval_cmd->add_option("--out", out, "output directory");

  auto* params_cmd = app.add_subcommand("params", "parameter and multiply-accumulate audit");
  params_cmd->add_option("--preset", preset_name, "b0|table1_literal|toy");
  params_cmd->add_option("--lstm-rule", rule, "hxc|c");
  params_cmd->add_option("--input", input, "square input size (default from preset)");
  params_cmd->add_option("--out", out, "output directory");

  auto* grad_cmd = app.add_subcommand("gradcheck", "finite-difference gradient checks");
  grad_cmd->add_option("--module", module, "all, a module name, or a family prefix (cbam, lstm, mbconv, ...)");
  grad_cmd->add_option("--out", out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    report_error(as_json, kInputError, "UsageError", e.what());
    return kInputError;
  }

  try {
    if (parse->parsed()) {
      manifest.command = "parse";
      return cmd_parse(in, out, manifest);
    }
    if (synth_cmd->parsed()) {
      manifest.command = "synth";
      return cmd_synth(kind, scene, seed, out, manifest);
    }
    if (maps_cmd->parsed()) {
      manifest.command = "maps";
      return cmd_maps(in, domains, out, pgm, !no_mti, resize, manifest);
    }
    if (aug_cmd->parsed()) {
      manifest.command = "augment";
      return cmd_augment(in, policy, aug_seed, out, pgm, manifest);
    }
    if (train_cmd->parsed()) {
      manifest.command = "train-toy";
      return cmd_train_toy(config, out, epochs, require_acc, manifest);
    }
    if (eval_cmd->parsed()) {
      manifest.command = "eval";
      return cmd_eval(ckpt, data, split, out, manifest);
    }
    if (params_cmd->parsed()) {
      manifest.command = "params";
      return cmd_params(preset_name, rule, input, as_json, out, manifest);
    }
    if (grad_cmd->parsed()) {
      manifest.command = "gradcheck";
      return cmd_gradcheck(module, as_json, out, manifest);
    }
  } catch (const VerificationFailure& e) {
    report_error(as_json, kVerificationFailed, "VerificationFailed", e.what());
    return kVerificationFailed;
  } catch (const Error& e) {
    report_error(as_json, kInputError, std::string(to_string(e.code())), e.what());
    return kInputError;
  } catch (const fs::filesystem_error& e) {
    report_error(as_json, kInputError, "Io", e.what());
    return kInputError;
  } catch (const std::exception& e) {
    report_error(as_json, kInternalError, "Internal", e.what());
    return kInternalError;
  }
  return kInternalError;
}
