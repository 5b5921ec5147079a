#include "react/checkpoint.hpp"
#include "react/errors.hpp"
#include "react/export.hpp"
#include "react/pipeline.hpp"
#include "react/policies.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

using namespace react;
using nlohmann::json;

namespace {

int exit_code(const Error& e) {
  const std::string kind = e.kind();
  if (kind == "config") return 1;
  if (kind == "training") return 3;
  return 2;
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json metrics_json(const ClassificationMetrics& m) {
  return {{"auroc", optional_json(m.auroc)}, {"auprc", optional_json(m.auprc)}, {"skipped_classes", m.skipped_classes}};
}

json costs_json(const std::optional<CostSummary>& s) {
  if (!s) return nullptr;
  return {{"n", s->n}, {"total", s->total}, {"temporal", s->temporal}, {"context", s->context}};
}

std::vector<double> parse_lambdas(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::logic_error&) {
      throw ConfigError("bad lambda '" + item + "'");
    }
  }
  if (out.empty()) throw ConfigError("empty lambda list");
  return out;
}

TrainConfig load_config(const std::string& path, const std::optional<std::uint64_t>& seed) {
  TrainConfig cfg = load_train_config(path);
  if (seed) cfg.seed = *seed;
  cfg.validate();
  return cfg;
}

const std::vector<Instance>& pick_split(const Split& s, const std::string& name, std::vector<Instance>& all) {
  if (name == "train") return s.train;
  if (name == "val") return s.val;
  if (name == "test") return s.test;
  all = s.train;
  all.insert(all.end(), s.val.begin(), s.val.end());
  all.insert(all.end(), s.test.begin(), s.test.end());
  return all;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"REACT: cost-aware feature acquisition over time"};
  app.require_subcommand(1);
  std::optional<std::uint64_t> seed;
  app.add_option("--seed", seed, "Override the seed of the spec or config");

  std::string spec_path, data_path, config_path, out_path, ckpt_path, pretrained_path, records_path, out_dir;
  std::string lambdas_text, split_name = "test", policy_text = "react";

  auto* gen = app.add_subcommand("gen-data", "Generate a synthetic dataset");
  gen->add_option("--spec", spec_path, "Synthetic spec JSON")->required();
  gen->add_option("--out", out_path, "Output dataset JSON")->required();

  auto* pre = app.add_subcommand("pretrain", "Pretrain the predictor on randomly masked inputs");
  pre->add_option("--data", data_path)->required();
  pre->add_option("--config", config_path)->required();
  pre->add_option("--out", out_path, "Output checkpoint")->required();

  auto* tr = app.add_subcommand("train", "Train selector, planner and predictor jointly");
  tr->add_option("--data", data_path)->required();
  tr->add_option("--config", config_path)->required();
  tr->add_option("--pretrained", pretrained_path, "Checkpoint from pretrain")->required();
  tr->add_option("--out", out_path, "Output checkpoint")->required();

  auto* inf = app.add_subcommand("infer", "Run acquisition rollouts and write records");
  inf->add_option("--ckpt", ckpt_path)->required();
  inf->add_option("--data", data_path)->required();
  inf->add_option("--out", out_path, "Output records JSON")->required();
  inf->add_option("--split", split_name, "train|val|test|all")
      ->check(CLI::IsMember({"train", "val", "test", "all"}));
  inf->add_option("--policy", policy_text,
                  "react|react_all|react_none|random_rate:<r>|fixed_interval:<k>|acquire_all|acquire_none");

  auto* ev = app.add_subcommand("eval", "Pooled AUROC/AUPRC and mean costs of a records file");
  ev->add_option("--records", records_path)->required();
  ev->add_option("--data", data_path)->required();

  auto* sw = app.add_subcommand("sweep", "Train and evaluate one policy per lambda");
  sw->add_option("--data", data_path)->required();
  sw->add_option("--lambdas", lambdas_text, "Comma-separated list")->required();
  sw->add_option("--config", config_path)->required();
  sw->add_option("--out", out_path, "Output CSV")->required();

  auto* ex = app.add_subcommand("export-traj", "Write trajectory JSON, transition graph (JSON/DOT) and tables");
  ex->add_option("--records", records_path)->required();
  ex->add_option("--out-dir", out_dir)->required();
  ex->add_option("--data", data_path, "Dataset for feature names");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: usage: " << e.what() << "\n";
    return 1;
  }

  try {
    if (*gen) {
      std::ifstream in(spec_path);
      if (!in) throw IoError("cannot open " + spec_path);
      json j;
      try {
        j = json::parse(in);
      } catch (const json::parse_error& e) {
        throw ConfigError(spec_path + ": " + e.what());
      }
      auto spec = synthetic_spec_from_json(j);
      if (seed) spec.seed = *seed;
      const auto ds = generate_synthetic(spec);
      save_dataset(ds, out_path);
      std::cout << json{{"instances", ds.instances.size()}, {"out", out_path}}.dump() << "\n";
    } else if (*pre) {
      const auto cfg = load_config(config_path, seed);
      const auto data = prepare_data(load_dataset(data_path), cfg);
      PretrainReport report;
      Models models = pretrain_models(data, cfg, &report);
      save_checkpoint({std::move(models), data.manifest, cfg}, out_path);
      std::cout << json{{"epochs", report.epochs},
                        {"best_val_loss", report.best_val_loss},
                        {"best_val_accuracy", report.best_val_accuracy}}
                       .dump()
                << "\n";
    } else if (*tr) {
      const auto cfg = load_config(config_path, seed);
      auto ckpt = load_checkpoint(pretrained_path);
      const auto ds = load_dataset(data_path);
      const auto parts = resplit(ds, ckpt.manifest, cfg);
      if (!(ckpt.models.arch == cfg.arch)) throw ConfigError("config architecture differs from the pretrained checkpoint");
      ckpt.models.tau = cfg.tau;
      auto result = train(std::move(ckpt.models), parts.train, parts.val, ckpt.manifest.costs(), cfg,
                          [&](const LogRecord& r) {
                            if (r.val_auroc) std::cout << log_record_to_json(r).dump() << "\n" << std::flush;
                          });
      save_checkpoint({std::move(result.models), ckpt.manifest, cfg}, out_path);
    } else if (*inf) {
      const auto ckpt = load_checkpoint(ckpt_path);
      const auto policy = parse_policy(policy_text);
      const auto parts = resplit(load_dataset(data_path), ckpt.manifest, ckpt.config);
      std::vector<Instance> all;
      const auto& instances = pick_split(parts, split_name, all);
      auto result = ablation_policy(policy, ckpt.models, instances, ckpt.manifest.costs());
      save_records(result.records, out_path);
      std::cout << json{{"policy", to_string(policy)},
                        {"split", split_name},
                        {"costs", costs_json(result.summary)},
                        {"metrics", metrics_json(result.metrics)}}
                       .dump()
                << "\n";
    } else if (*ev) {
      const auto records = load_records(records_path);
      const auto ds = load_dataset(data_path);
      const auto metrics = pooled_metrics(records, ds.instances);
      for (auto c : metrics.skipped_classes) std::cerr << "warning: class " << c << " absent, skipped\n";
      std::cout << json{{"records", records.size()},
                        {"costs", costs_json(summarize_costs(records))},
                        {"metrics", metrics_json(metrics)}}
                       .dump()
                << "\n";
    } else if (*sw) {
      const auto cfg = load_config(config_path, seed);
      const auto lambdas = parse_lambdas(lambdas_text);
      const auto data = prepare_data(load_dataset(data_path), cfg);
      const auto runs = sweep(data, lambdas, cfg);
      write_sweep_csv(runs, out_path);
      for (const auto& r : runs)
        if (!r.row.ok) std::cerr << "warning: lambda " << r.row.lambda << " failed: " << r.row.error << "\n";
      std::cout << sweep_csv_header() << "\n";
      for (const auto& r : runs) std::cout << sweep_csv_row(r.row) << "\n";
    } else if (*ex) {
      const auto records = load_records(records_path);
      if (records.empty()) throw DataError("records file is empty");
      std::vector<std::string> names;
      if (!data_path.empty()) names = load_dataset(data_path).manifest.temporal_names;
      export_trajectories(records, out_dir, names);
      std::cout << json{{"records", records.size()}, {"out_dir", out_dir}}.dump() << "\n";
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.kind() << ": " << e.what() << "\n";
    return exit_code(e);
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
