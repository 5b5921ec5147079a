#include "react/pipeline.hpp"

#include "react/errors.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace react {

PreparedData prepare_data(const Dataset& ds, const TrainConfig& cfg) {
  PreparedData out;
  out.manifest = ds.manifest;
  out.manifest.standardization.reset();
  out.split = split(ds.instances, cfg.split_fractions, cfg.seed);
  if (cfg.standardize) {
    const auto s = fit_standardization(out.split.train, ds.manifest.dims);
    apply_standardization(s, out.split.train);
    apply_standardization(s, out.split.val);
    apply_standardization(s, out.split.test);
    out.manifest.standardization = s;
  }
  return out;
}

Split resplit(const Dataset& ds, const DatasetManifest& manifest, const TrainConfig& cfg) {
  if (!(ds.manifest.dims == manifest.dims)) throw DataError("dataset dimensions do not match the checkpoint");
  Split s = split(ds.instances, cfg.split_fractions, cfg.seed);
  if (manifest.standardization) {
    apply_standardization(*manifest.standardization, s.train);
    apply_standardization(*manifest.standardization, s.val);
    apply_standardization(*manifest.standardization, s.test);
  }
  return s;
}

Models pretrain_models(const PreparedData& data, const TrainConfig& cfg, PretrainReport* report) {
  Models m = init_models(data.manifest.dims, cfg.seed, cfg.arch, cfg.tau);
  const auto r = pretrain_predictor(m.predictor, data.split.train, data.split.val, cfg);
  if (report) *report = r;
  return m;
}

Evaluation evaluate(const Models& models, std::span<const Instance> instances, const CostSpec& costs,
                    const InferenceOptions& opts) {
  Evaluation e;
  auto inf = infer_dataset(models, instances, costs, opts);
  e.records = std::move(inf.records);
  if (inf.summary) e.costs = *inf.summary;
  e.metrics = pooled_metrics(e.records, instances);
  return e;
}

std::vector<SweepRun> sweep(const PreparedData& data, std::span<const double> lambdas, const TrainConfig& base,
                            const SweepOptions& opts, const Models* pretrained) {
  if (lambdas.empty()) throw ConfigError("sweep: lambda list is empty");
  std::vector<double> order(lambdas.begin(), lambdas.end());
  std::stable_sort(order.begin(), order.end(), std::greater<>());
  const CostSpec costs = data.manifest.costs();

  std::optional<Models> shared;
  if (opts.share_pretrained) shared = pretrained ? *pretrained : pretrain_models(data, base);

  std::vector<SweepRun> runs;
  for (double lambda : order) {
    SweepRun run;
    run.row.lambda = lambda;
    try {
      TrainConfig cfg = base;
      cfg.lambda = lambda;
      cfg.validate();
      Models start = shared ? *shared : pretrain_models(data, cfg);
      auto trained = train(std::move(start), data.split.train, data.split.val, costs, cfg);
      auto ev = evaluate(trained.models, data.split.test, costs);
      run.row.total_cost = ev.costs.total;
      run.row.temporal_cost = ev.costs.temporal;
      run.row.context_cost = ev.costs.context;
      run.row.auroc = ev.metrics.auroc;
      run.row.auprc = ev.metrics.auprc;
      if (opts.keep_runs) {
        run.models = std::move(trained.models);
        run.records = std::move(ev.records);
      }
    } catch (const Error& e) {
      run.row.ok = false;
      run.row.error = std::string(e.kind()) + ": " + e.what();
    }
    runs.push_back(std::move(run));
  }
  return runs;
}

std::string sweep_csv_header() { return "lambda,total_cost,temporal_cost,context_cost,auroc,auprc"; }

std::string sweep_csv_row(const SweepRow& r) {
  std::ostringstream out;
  out.precision(17);
  const auto opt = [&](const std::optional<double>& v) {
    if (v) out << *v;
    else out << "nan";
  };
  out << r.lambda << ',';
  if (r.ok) out << r.total_cost << ',' << r.temporal_cost << ',' << r.context_cost << ',';
  else out << "nan,nan,nan,";
  opt(r.ok ? r.auroc : std::nullopt);
  out << ',';
  opt(r.ok ? r.auprc : std::nullopt);
  return out.str();
}

void write_sweep_csv(std::span<const SweepRun> runs, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << sweep_csv_header() << '\n';
  for (const auto& r : runs) out << sweep_csv_row(r.row) << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace react
