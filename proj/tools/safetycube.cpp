#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "safetycube/api.h"
#include "safetycube/generator.h"
#include "safetycube/olap_script.h"
#include "safetycube/reports.h"
#include "safetycube/warehouse.h"

using namespace safetycube;
using nlohmann::json;

namespace {

constexpr int kUsageError = 1;
constexpr int kDataError = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string warehouse;
  std::string format = "json";
  std::string config;
  std::uint64_t seed = 42;
};

Warehouse open_warehouse(const Options& o) {
  if (o.warehouse.empty()) throw UsageError("no warehouse: pass --warehouse or set SAFETYCUBE_WAREHOUSE");
  return Warehouse::open(o.warehouse);
}

WarehouseConfig effective_config(const Options& o, const Warehouse& w) {
  return o.config.empty() ? w.config() : load_config(o.config);
}

/// Inline JSON, or the contents of a file when the argument starts with '@'.
json json_argument(const std::string& arg) {
  try {
    if (!arg.empty() && arg.front() == '@') return json::parse(read_file(arg.substr(1)));
    return json::parse(arg);
  } catch (const json::parse_error& e) {
    throw UsageError(e.what());
  }
}

// Syntax errors in a script are the caller's mistake; type errors against the cube are data errors.
QueryScript script_argument(const std::string& text) {
  try {
    return parse_script(text);
  } catch (const ScriptError& e) {
    throw UsageError(e.what());
  }
}

void print_json(const json& j) { std::cout << j.dump(2) << "\n"; }

ExportFormat format_of(const Options& o) {
  try {
    return parse_export_format(o.format);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

int cmd_init(const Options& o, const std::string& sites_path) {
  if (o.warehouse.empty()) throw UsageError("no warehouse: pass --warehouse or set SAFETYCUBE_WAREHOUSE");
  const SiteMap sites = sites_path.empty() ? osan_sites() : load_site_metadata(sites_path);
  const WarehouseConfig cfg = o.config.empty() ? WarehouseConfig{} : load_config(o.config);
  const Warehouse w = Warehouse::init(o.warehouse, sites, cfg);
  print_json(w.manifest());
  return 0;
}

int cmd_ingest(const Options& o, const std::vector<std::string>& files) {
  Warehouse w = open_warehouse(o);
  std::vector<Scene> scenes;
  for (const auto& f : files) {
    auto part = load_scene_file(f);
    scenes.insert(scenes.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  }
  const std::size_t n = w.ingest(scenes);
  print_json({{"ingested", n}, {"manifest", w.manifest()}});
  return 0;
}

int cmd_extract(const Options& o) {
  Warehouse w = open_warehouse(o);
  const WarehouseConfig cfg = effective_config(o, w);
  const Predictor predictor = w.load_predictor();
  std::vector<FeatureRecord> records;
  std::size_t failed = 0;
  for (const auto& s : w.load_scenes()) {
    try {
      records.push_back(extract_features(s, w.sites().at(s.spot_id).geometry, cfg.features, predictor));
    } catch (const FeatureError& e) {
      std::cerr << "extract: " << e.what() << "\n";
      ++failed;
    }
  }
  w.write_features(records);
  w.write_facts(records);
  print_json({{"extracted", records.size()}, {"failed", failed}, {"manifest", w.manifest()}});
  return failed == 0 ? 0 : kDataError;
}

int cmd_train(const Options& o, const std::string& name, int epochs, const std::string& objects) {
  Warehouse w = open_warehouse(o);
  std::vector<TrainingSample> data;
  for (const auto& s : w.load_scenes()) {
    for (const auto& t : s.tracks) {
      const bool want = objects == "all" || (objects == "vehicle") == (t.object_type == ObjectType::vehicle);
      if (want) data.push_back({t.points, {}});
    }
  }
  TrainingOptions opts;
  opts.epochs = epochs;
  const TrainingResult r = train_predictor(data, opts, o.seed);
  w.save_predictor(r.predictor, name);
  print_json({{"predictor", "predictors/" + name + ".json"},
              {"trajectories", data.size()},
              {"initial_loss", r.loss_history.front()},
              {"final_loss", r.loss_history.back()}});
  return 0;
}

ResultGrid grid_for(const Cube& cube, const std::string& script_path, const std::string& query) {
  if (script_path.empty() == query.empty()) throw UsageError("pass exactly one of --script or --query");
  if (!script_path.empty()) return run_script(cube, script_argument(read_file(script_path)));
  return cube.aggregate(query_from_json(json_argument(query)));
}

int cmd_query(const Options& o, const std::string& script_path, const std::string& query) {
  const ExportFormat fmt = format_of(o);
  const Warehouse w = open_warehouse(o);
  std::cout << export_result(grid_for(w.cube(), script_path, query), fmt);
  return 0;
}

int cmd_drill_through(const Options& o, const std::string& cell) {
  const ExportFormat fmt = format_of(o);
  const Warehouse w = open_warehouse(o);
  const Cube cube = w.cube();
  const json c = json_argument(cell);
  const auto labels = c.at("labels").get<std::vector<std::string>>();
  std::vector<std::string> codes;
  if (c.contains("script")) {
    const ResultGrid g = run_script(cube, script_argument(c.at("script").get<std::string>()));
    codes = cube.drill_through(g, g.cell_index(labels));
  } else {
    codes = cube.drill_through(query_from_json(c.at("query")), labels);
  }
  if (fmt == ExportFormat::csv) {
    std::cout << "scene_code\r\n";
    for (const auto& s : codes) std::cout << s << "\r\n";
  } else {
    print_json({{"labels", labels}, {"scene_codes", codes}});
  }
  return 0;
}

int cmd_report(const Options& o, const std::string& which, const std::string& school, const std::string& other) {
  if (o.format != "json") throw UsageError("reports are emitted as JSON only");
  const Warehouse w = open_warehouse(o);
  const Cube cube = w.cube();
  if (which == "scenario1") {
    print_json(report_scenario1(cube));
  } else {
    print_json(report_scenario2(cube, {school, other}));
  }
  return 0;
}

int cmd_generate(const Options& o, const std::string& corpus, int n, const std::string& output,
                 const std::string& truth_path, bool ingest) {
  if (output.empty() && !ingest) throw UsageError("pass --output and/or --ingest");
  const CorpusSpec spec = load_corpus_spec(corpus);
  std::optional<Warehouse> w;
  if (ingest) w = open_warehouse(o);
  const SiteMap sites = w ? w->sites() : osan_sites();
  const auto generated = generate_corpus(spec, n, o.seed, sites);
  std::vector<Scene> scenes;
  std::string truth;
  for (const auto& g : generated) {
    scenes.push_back(g.scene);
    const auto& t = g.truth;
    truth += json{{"scene_code", g.scene.scene_code},
                  {"component", spec.components[g.component].label},
                  {"interactive", t.interactive},
                  {"psm", t.interactive ? json(t.psm_s()) : json(nullptr)},
                  {"yielding", t.yielding},
                  {"stop", t.stop},
                  {"vehicle_speed_kmh", t.vehicle_speed_kmh},
                  {"pedestrian_speed_kmh", t.pedestrian_speed_kmh},
                  {"min_separation_m", t.interactive ? json(t.min_separation_m) : json(nullptr)}}
                 .dump() +
             "\n";
  }
  if (!output.empty()) write_scene_file(output, scenes);
  if (!truth_path.empty()) write_file_atomic(truth_path, truth);
  json out{{"generated", scenes.size()}, {"seed", o.seed}};
  if (w) out["ingested"] = w->ingest(scenes);
  print_json(out);
  return 0;
}

int cmd_serve(const Options& o, const std::string& listen) {
  if (o.warehouse.empty()) throw UsageError("no warehouse: pass --warehouse or set SAFETYCUBE_WAREHOUSE");
  const auto colon = listen.rfind(':');
  if (colon == std::string::npos) throw UsageError("--listen expects host:port");
  int port = 0;
  try {
    port = std::stoi(listen.substr(colon + 1));
  } catch (const std::exception&) {
    throw UsageError("--listen expects host:port");
  }
  ApiService api(o.warehouse);
  std::cerr << "serving " << o.warehouse << " on " << listen << "\n";
  serve_http(api, listen.substr(0, colon), port);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Traffic-safety data cube over crosswalk trajectory scenes"};
  app.require_subcommand(1);
  app.fallthrough();
  Options o;
  app.add_option("--warehouse", o.warehouse, "Warehouse directory")->envname("SAFETYCUBE_WAREHOUSE");
  app.add_option("--format", o.format, "Output format")->check(CLI::IsMember({"json", "csv"}));
  app.add_option("--config", o.config, "Warehouse config JSON overriding the stored one");
  app.add_option("--seed", o.seed, "Random seed");

  auto* init = app.add_subcommand("init", "Create a warehouse");
  std::string sites_path;
  init->add_option("--sites", sites_path, "Site metadata JSON (default: the nine Osan spots)");

  auto* ingest = app.add_subcommand("ingest", "Add JSONL scene files to the warehouse");
  std::vector<std::string> files;
  ingest->add_option("files", files, "Scene JSONL files")->required()->check(CLI::ExistingFile);

  auto* extract = app.add_subcommand("extract", "Extract features and facts for every stored scene");

  auto* train = app.add_subcommand("train-predictor", "Train the recurrent predictor on stored tracks");
  std::string name = "lstm";
  int epochs = 200;
  std::string objects = "vehicle";
  train->add_option("--name", name, "Predictor file name under predictors/");
  train->add_option("--epochs", epochs)->check(CLI::PositiveNumber);
  train->add_option("--objects", objects)->check(CLI::IsMember({"vehicle", "pedestrian", "all"}));

  auto* query = app.add_subcommand("query", "Run an OLAP script or a CubeQuery JSON");
  std::string script_path, query_json;
  query->add_option("--script", script_path, "OLAP script file")->check(CLI::ExistingFile);
  query->add_option("--query", query_json, "CubeQuery JSON, or @file");

  auto* drill = app.add_subcommand("drill-through", "Scene codes behind one cell");
  std::string cell;
  drill->add_option("--cell", cell, R"(JSON {"query"|"script": ..., "labels": [...]}, or @file)")->required();

  auto* report = app.add_subcommand("report", "Scenario report bundle");
  std::string which, school = "Spot E", other = "Spot G";
  report->add_option("scenario", which)->required()->check(CLI::IsMember({"scenario1", "scenario2"}));
  report->add_option("--school-spot", school);
  report->add_option("--other-spot", other);

  auto* generate = app.add_subcommand("generate", "Synthetic corpus from a mixture spec");
  std::string corpus, output, truth;
  int n = 2000;
  bool do_ingest = false;
  generate->add_option("--corpus", corpus, "Corpus spec JSON")->required()->check(CLI::ExistingFile);
  generate->add_option("-n,--count", n)->check(CLI::PositiveNumber);
  generate->add_option("--output", output, "Scene JSONL output");
  generate->add_option("--truth", truth, "Ground-truth JSONL output");
  generate->add_flag("--ingest", do_ingest, "Ingest into the warehouse");

  auto* serve = app.add_subcommand("serve", "HTTP JSON API over the warehouse");
  std::string listen = "127.0.0.1:8080";
  serve->add_option("--listen", listen, "host:port");

  auto* sites = app.add_subcommand("sites", "Print the built-in site metadata");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kUsageError;
  }

  try {
    if (*init) return cmd_init(o, sites_path);
    if (*ingest) return cmd_ingest(o, files);
    if (*extract) return cmd_extract(o);
    if (*train) return cmd_train(o, name, epochs, objects);
    if (*query) return cmd_query(o, script_path, query_json);
    if (*drill) return cmd_drill_through(o, cell);
    if (*report) return cmd_report(o, which, school, other);
    if (*generate) return cmd_generate(o, corpus, n, output, truth, do_ingest);
    if (*serve) return cmd_serve(o, listen);
    if (*sites) {
      print_json(sites_to_json(osan_sites()));
      return 0;
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n" << app.help();
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDataError;
  }
  return kUsageError;
}
