#include "react/data.hpp"

#include "react/errors.hpp"
#include "react/rng.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace react {

using nlohmann::json;

namespace {

std::string instance_error(const Instance& inst, const std::string& field, const std::string& what) {
  std::ostringstream msg;
  msg << "instance '" << inst.id << "' field '" << field << "': " << what;
  return msg.str();
}

Vector vector_from_json(const json& j, const std::string& where) {
  if (!j.is_array()) throw DataError(where + ": expected an array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw DataError(where + ": expected numbers");
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

json vector_to_json(const Vector& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

std::size_t count_from_json(const json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_number_integer() || j[key].get<long long>() < 0)
    throw DataError(std::string("manifest.") + key + ": expected a nonnegative integer");
  return j[key].get<std::size_t>();
}

}  // namespace

void DatasetManifest::validate() const {
  if (dims.C < 2) throw DataError("manifest.C: need at least 2 classes");
  if (dims.T == 0 || dims.d == 0) throw DataError("manifest: T and d must be positive");
  if (static_cast<std::size_t>(context_costs.size()) != dims.d_s)
    throw DataError("manifest.context_costs: length does not match d_s");
  if (static_cast<std::size_t>(temporal_costs.size()) != dims.d)
    throw DataError("manifest.temporal_costs: length does not match d");
  if (context_names.size() != dims.d_s) throw DataError("manifest.context_names: length does not match d_s");
  if (temporal_names.size() != dims.d) throw DataError("manifest.temporal_names: length does not match d");
  if ((context_costs.array() < 0.0).any() || !context_costs.allFinite())
    throw DataError("manifest.context_costs: entries must be finite and nonnegative");
  if ((temporal_costs.array() < 0.0).any() || !temporal_costs.allFinite())
    throw DataError("manifest.temporal_costs: entries must be finite and nonnegative");
}

void validate_instance(const DatasetManifest& m, const Instance& inst) {
  const Dims& dims = m.dims;
  if (static_cast<std::size_t>(inst.context.size()) != dims.d_s)
    throw DataError(instance_error(inst, "context", "length does not match manifest d_s"));
  if (static_cast<std::size_t>(inst.temporal.rows()) != dims.T ||
      static_cast<std::size_t>(inst.temporal.cols()) != dims.d)
    throw DataError(instance_error(inst, "temporal", "shape does not match manifest T x d"));
  if (inst.labels.size() != dims.T)
    throw DataError(instance_error(inst, "labels", "length does not match manifest T"));
  for (int y : inst.labels)
    if (y < 0 || static_cast<std::size_t>(y) >= dims.C)
      throw DataError(instance_error(inst, "labels", "label out of range"));
  if (!inst.context.allFinite()) throw DataError(instance_error(inst, "context", "non-finite value"));
  if (!inst.temporal.allFinite()) throw DataError(instance_error(inst, "temporal", "non-finite value"));
}

void validate_dataset(const Dataset& ds) {
  ds.manifest.validate();
  for (const auto& inst : ds.instances) validate_instance(ds.manifest, inst);
}

json manifest_to_json(const DatasetManifest& m) {
  json j;
  j["d_s"] = m.dims.d_s;
  j["d"] = m.dims.d;
  j["T"] = m.dims.T;
  j["C"] = m.dims.C;
  j["context_costs"] = vector_to_json(m.context_costs);
  j["temporal_costs"] = vector_to_json(m.temporal_costs);
  j["context_names"] = m.context_names;
  j["temporal_names"] = m.temporal_names;
  if (m.standardization) {
    const auto& s = *m.standardization;
    j["standardization"] = {{"context_mean", vector_to_json(s.context_mean)},
                            {"context_std", vector_to_json(s.context_std)},
                            {"temporal_mean", vector_to_json(s.temporal_mean)},
                            {"temporal_std", vector_to_json(s.temporal_std)}};
  }
  return j;
}

DatasetManifest manifest_from_json(const json& j) {
  if (!j.is_object()) throw DataError("manifest: expected an object");
  DatasetManifest m;
  m.dims.d_s = count_from_json(j, "d_s");
  m.dims.d = count_from_json(j, "d");
  m.dims.T = count_from_json(j, "T");
  m.dims.C = count_from_json(j, "C");
  if (!j.contains("context_costs") || !j.contains("temporal_costs"))
    throw DataError("manifest: missing cost vectors");
  m.context_costs = vector_from_json(j["context_costs"], "manifest.context_costs");
  m.temporal_costs = vector_from_json(j["temporal_costs"], "manifest.temporal_costs");
  try {
    m.context_names = j.at("context_names").get<std::vector<std::string>>();
    m.temporal_names = j.at("temporal_names").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw DataError(std::string("manifest names: ") + e.what());
  }
  if (j.contains("standardization")) {
    const auto& s = j["standardization"];
    Standardization st;
    st.context_mean = vector_from_json(s.at("context_mean"), "standardization.context_mean");
    st.context_std = vector_from_json(s.at("context_std"), "standardization.context_std");
    st.temporal_mean = vector_from_json(s.at("temporal_mean"), "standardization.temporal_mean");
    st.temporal_std = vector_from_json(s.at("temporal_std"), "standardization.temporal_std");
    m.standardization = st;
  }
  m.validate();
  return m;
}

json dataset_to_json(const Dataset& ds) {
  json j;
  j["manifest"] = manifest_to_json(ds.manifest);
  json arr = json::array();
  for (const auto& inst : ds.instances) {
    json rows = json::array();
    for (Eigen::Index t = 0; t < inst.temporal.rows(); ++t) {
      const Vector row = inst.temporal.row(t).transpose();
      rows.push_back(vector_to_json(row));
    }
    arr.push_back({{"id", inst.id}, {"context", vector_to_json(inst.context)}, {"temporal", rows},
                   {"labels", inst.labels}});
  }
  j["instances"] = std::move(arr);
  return j;
}

Dataset dataset_from_json(const json& j) {
  if (!j.is_object() || !j.contains("manifest") || !j.contains("instances"))
    throw DataError("dataset: expected {manifest, instances}");
  Dataset ds;
  ds.manifest = manifest_from_json(j["manifest"]);
  const auto& arr = j["instances"];
  if (!arr.is_array()) throw DataError("dataset.instances: expected an array");
  ds.instances.reserve(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const auto& ji = arr[i];
    Instance inst;
    if (ji.contains("id") && ji["id"].is_string())
      inst.id = ji["id"].get<std::string>();
    else if (ji.contains("id") && ji["id"].is_number_integer())
      inst.id = std::to_string(ji["id"].get<long long>());
    else
      throw DataError("instances[" + std::to_string(i) + "]: missing id");
    if (!ji.contains("context") || !ji.contains("temporal") || !ji.contains("labels"))
      throw DataError(instance_error(inst, "*", "missing context/temporal/labels"));
    inst.context = vector_from_json(ji["context"], "instance '" + inst.id + "' field 'context'");
    const auto& rows = ji["temporal"];
    if (!rows.is_array()) throw DataError(instance_error(inst, "temporal", "expected an array of rows"));
    const std::size_t T = rows.size();
    const std::size_t d = T > 0 && rows[0].is_array() ? rows[0].size() : 0;
    inst.temporal.resize(static_cast<Eigen::Index>(T), static_cast<Eigen::Index>(d));
    for (std::size_t t = 0; t < T; ++t) {
      const Vector row = vector_from_json(rows[t], "instance '" + inst.id + "' field 'temporal'");
      if (static_cast<std::size_t>(row.size()) != d)
        throw DataError(instance_error(inst, "temporal", "ragged rows"));
      inst.temporal.row(static_cast<Eigen::Index>(t)) = row.transpose();
    }
    const auto& labels = ji["labels"];
    if (!labels.is_array()) throw DataError(instance_error(inst, "labels", "expected an array"));
    for (const auto& y : labels) {
      if (!y.is_number_integer()) throw DataError(instance_error(inst, "labels", "expected integers"));
      inst.labels.push_back(y.get<int>());
    }
    validate_instance(ds.manifest, inst);
    ds.instances.push_back(std::move(inst));
  }
  return ds;
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  return dataset_from_json(j);
}

void save_dataset(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write dataset file " + path.string());
  out << dataset_to_json(ds).dump() << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

void SyntheticSpec::validate() const {
  if (d == 0 || T == 0) throw ConfigError("synthetic: d and T must be positive");
  if (C < 2) throw ConfigError("synthetic: C must be >= 2");
  if (informative_context > d_s) throw ConfigError("synthetic: informative_context > d_s");
  if (informative_temporal > d) throw ConfigError("synthetic: informative_temporal > d");
  if (!(ar_coefficient > 0.0 && ar_coefficient < 1.0)) throw ConfigError("synthetic: ar_coefficient must lie in (0,1)");
  if (!(noise_std >= 0.0)) throw ConfigError("synthetic: noise_std must be nonnegative");
}

SyntheticSpec synthetic_spec_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("synthetic spec: expected an object");
  SyntheticSpec s;
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "n_instances") s.n_instances = value.get<std::size_t>();
      else if (key == "d_s") s.d_s = value.get<std::size_t>();
      else if (key == "d") s.d = value.get<std::size_t>();
      else if (key == "T") s.T = value.get<std::size_t>();
      else if (key == "C") s.C = value.get<std::size_t>();
      else if (key == "informative_context") s.informative_context = value.get<std::size_t>();
      else if (key == "informative_temporal") s.informative_temporal = value.get<std::size_t>();
      else if (key == "ar_coefficient") s.ar_coefficient = value.get<double>();
      else if (key == "noise_std") s.noise_std = value.get<double>();
      else if (key == "seed") s.seed = value.get<std::uint64_t>();
      else throw ConfigError("synthetic spec: unknown key '" + key + "'");
    } catch (const json::exception& e) {
      throw ConfigError("synthetic spec: bad value for '" + key + "': " + e.what());
    }
  }
  s.validate();
  return s;
}

json synthetic_spec_to_json(const SyntheticSpec& s) {
  return {{"n_instances", s.n_instances},
          {"d_s", s.d_s},
          {"d", s.d},
          {"T", s.T},
          {"C", s.C},
          {"informative_context", s.informative_context},
          {"informative_temporal", s.informative_temporal},
          {"ar_coefficient", s.ar_coefficient},
          {"noise_std", s.noise_std},
          {"seed", s.seed}};
}

namespace {

struct RawInstance {
  Vector context;
  Grid temporal;
  Vector scores;  // per step, before bucketing
};

RawInstance draw_instance(const SyntheticSpec& spec, Rng& rng) {
  RawInstance r;
  r.context.resize(static_cast<Eigen::Index>(spec.d_s));
  for (Eigen::Index j = 0; j < r.context.size(); ++j) r.context[j] = rng.normal();
  double bias = 0.0;
  for (std::size_t j = 0; j < spec.informative_context; ++j) bias += r.context[static_cast<Eigen::Index>(j)];

  const auto T = static_cast<Eigen::Index>(spec.T);
  const auto d = static_cast<Eigen::Index>(spec.d);
  const auto k_inf = static_cast<Eigen::Index>(spec.informative_temporal);
  const double rho = spec.ar_coefficient;
  const double innovation = std::sqrt(1.0 - rho * rho);
  Vector z(k_inf);
  for (Eigen::Index k = 0; k < k_inf; ++k) z[k] = rng.normal();  // stationary start
  r.temporal.resize(T, d);
  r.scores.resize(T);
  for (Eigen::Index t = 0; t < T; ++t) {
    if (t > 0)
      for (Eigen::Index k = 0; k < k_inf; ++k) z[k] = rho * z[k] + innovation * rng.normal();
    double score = bias;
    for (Eigen::Index k = 0; k < d; ++k) {
      if (k < k_inf) {
        r.temporal(t, k) = z[k] + spec.noise_std * rng.normal();
        score += r.temporal(t, k);
      } else {
        r.temporal(t, k) = rng.normal();
      }
    }
    r.scores[t] = score;
  }
  return r;
}

int bucket(double score, const std::vector<double>& thresholds) {
  return static_cast<int>(std::upper_bound(thresholds.begin(), thresholds.end(), score) - thresholds.begin());
}

constexpr std::uint64_t kPilotStream = 0x70696c6f74ULL;  // "pilot"
constexpr std::size_t kPilotSamples = 10000;

}  // namespace

Dataset generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  // Class thresholds: empirical quantiles of the score on a pilot draw.
  std::vector<double> pilot;
  const std::size_t pilot_instances = (kPilotSamples + spec.T - 1) / spec.T;
  for (std::size_t p = 0; p < pilot_instances; ++p) {
    Rng rng(Rng::combine(spec.seed ^ kPilotStream, p));
    const RawInstance r = draw_instance(spec, rng);
    for (Eigen::Index t = 0; t < r.scores.size(); ++t) pilot.push_back(r.scores[t]);
  }
  std::sort(pilot.begin(), pilot.end());
  std::vector<double> thresholds;
  for (std::size_t c = 1; c < spec.C; ++c) thresholds.push_back(pilot[c * pilot.size() / spec.C]);

  Dataset ds;
  auto& m = ds.manifest;
  m.dims = {spec.d_s, spec.d, spec.T, spec.C};
  m.context_costs = Vector::Ones(static_cast<Eigen::Index>(spec.d_s));
  m.temporal_costs = Vector::Ones(static_cast<Eigen::Index>(spec.d));
  for (std::size_t j = 0; j < spec.d_s; ++j) m.context_names.push_back("ctx" + std::to_string(j));
  for (std::size_t j = 0; j < spec.d; ++j) m.temporal_names.push_back("x" + std::to_string(j));

  ds.instances.reserve(spec.n_instances);
  for (std::size_t i = 0; i < spec.n_instances; ++i) {
    Rng rng(Rng::combine(spec.seed, i + 1));
    RawInstance r = draw_instance(spec, rng);
    Instance inst;
    inst.id = "s" + std::to_string(i);
    inst.context = std::move(r.context);
    inst.temporal = std::move(r.temporal);
    for (Eigen::Index t = 0; t < r.scores.size(); ++t) inst.labels.push_back(bucket(r.scores[t], thresholds));
    ds.instances.push_back(std::move(inst));
  }
  validate_dataset(ds);
  return ds;
}

Split split(const std::vector<Instance>& instances, const std::array<double, 3>& fractions, std::uint64_t seed) {
  for (double f : fractions)
    if (!(f > 0.0)) throw ConfigError("split: fractions must be positive");
  if (std::abs(fractions[0] + fractions[1] + fractions[2] - 1.0) > 1e-9)
    throw ConfigError("split: fractions must sum to 1");
  const std::size_t n = instances.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(Rng::combine(seed, 0x73706c6974ULL));
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  const auto n_train = std::min<std::size_t>(n, static_cast<std::size_t>(std::llround(fractions[0] * static_cast<double>(n))));
  const auto n_val = std::min<std::size_t>(n - n_train, static_cast<std::size_t>(std::llround(fractions[1] * static_cast<double>(n))));
  Split s;
  for (std::size_t k = 0; k < n; ++k) {
    const Instance& inst = instances[order[k]];
    if (k < n_train) s.train.push_back(inst);
    else if (k < n_train + n_val) s.val.push_back(inst);
    else s.test.push_back(inst);
  }
  return s;
}

Standardization fit_standardization(const std::vector<Instance>& train, const Dims& dims) {
  Standardization s;
  const auto ds = static_cast<Eigen::Index>(dims.d_s);
  const auto d = static_cast<Eigen::Index>(dims.d);
  s.context_mean = Vector::Zero(ds);
  s.context_std = Vector::Ones(ds);
  s.temporal_mean = Vector::Zero(d);
  s.temporal_std = Vector::Ones(d);
  if (train.empty()) return s;
  Vector c_sum = Vector::Zero(ds), c_sq = Vector::Zero(ds);
  Vector x_sum = Vector::Zero(d), x_sq = Vector::Zero(d);
  double x_count = 0.0;
  for (const auto& inst : train) {
    c_sum += inst.context;
    c_sq += inst.context.cwiseAbs2();
    x_sum += inst.temporal.colwise().sum().transpose();
    x_sq += inst.temporal.cwiseAbs2().colwise().sum().transpose();
    x_count += static_cast<double>(inst.temporal.rows());
  }
  const double n = static_cast<double>(train.size());
  auto finish = [](const Vector& sum, const Vector& sq, double count, Vector& mean, Vector& sd) {
    mean = sum / count;
    for (Eigen::Index j = 0; j < mean.size(); ++j) {
      const double var = std::max(0.0, sq[j] / count - mean[j] * mean[j]);
      sd[j] = var > 1e-24 ? std::sqrt(var) : 1.0;
    }
  };
  finish(c_sum, c_sq, n, s.context_mean, s.context_std);
  finish(x_sum, x_sq, x_count, s.temporal_mean, s.temporal_std);
  return s;
}

void apply_standardization(const Standardization& s, std::vector<Instance>& instances) {
  for (auto& inst : instances) {
    inst.context = (inst.context - s.context_mean).cwiseQuotient(s.context_std);
    for (Eigen::Index t = 0; t < inst.temporal.rows(); ++t)
      inst.temporal.row(t) =
          (inst.temporal.row(t) - s.temporal_mean.transpose()).cwiseQuotient(s.temporal_std.transpose());
  }
}

}  // namespace react
