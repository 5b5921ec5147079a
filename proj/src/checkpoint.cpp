#include "react/checkpoint.hpp"

#include "react/errors.hpp"

#include <fstream>

namespace react {

using nlohmann::json;

namespace {

constexpr const char* kFormat = "react-checkpoint";
constexpr int kVersion = 1;

json matrix_to_json(const Matrix& m) {
  std::vector<double> flat;
  flat.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) flat.push_back(m(i, j));
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"values", flat}};
}

void matrix_from_json(const json& j, Matrix& into, const std::string& what) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  if (rows != into.rows() || cols != into.cols())
    throw CheckpointError(what + ": shape does not match the declared architecture");
  const auto& values = j.at("values");
  if (static_cast<Eigen::Index>(values.size()) != rows * cols) throw CheckpointError(what + ": wrong value count");
  std::size_t k = 0;
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index c = 0; c < cols; ++c, ++k) {
      if (!values[k].is_number()) throw CheckpointError(what + ": non-numeric (non-finite?) parameter");
      into(i, c) = values[k].get<double>();
    }
}

json mlp_to_json(const nn::Mlp& mlp) {
  json layers = json::array();
  const auto params = mlp.params();
  for (std::size_t l = 0; l + 1 < params.size(); l += 2)
    layers.push_back({{"weight", matrix_to_json(params[l]->value)}, {"bias", matrix_to_json(params[l + 1]->value)}});
  return layers;
}

void mlp_from_json(const json& j, nn::Mlp& mlp, const std::string& what) {
  auto params = mlp.params();
  if (!j.is_array() || j.size() * 2 != params.size()) throw CheckpointError(what + ": layer count mismatch");
  for (std::size_t l = 0; l < j.size(); ++l) {
    matrix_from_json(j[l].at("weight"), params[2 * l]->value, what + " layer " + std::to_string(l) + " weight");
    matrix_from_json(j[l].at("bias"), params[2 * l + 1]->value, what + " layer " + std::to_string(l) + " bias");
  }
  mlp.zero_grad();
}

}  // namespace

json checkpoint_to_json(const Checkpoint& ckpt) {
  const Models& m = ckpt.models;
  json j;
  j["format"] = kFormat;
  j["version"] = kVersion;
  j["dims"] = {{"d_s", m.dims.d_s}, {"d", m.dims.d}, {"T", m.dims.T}, {"C", m.dims.C}};
  j["architecture"] = {{"planner_hidden", m.arch.planner_hidden},
                       {"predictor_hidden", m.arch.predictor_hidden},
                       {"time_embedding_dim", m.arch.time_embedding_dim}};
  j["tau"] = m.tau;
  j["alpha"] = matrix_to_json(m.selector.alpha.value);
  j["planner"] = mlp_to_json(m.planner.mlp());
  j["predictor"] = mlp_to_json(m.predictor.mlp());
  j["manifest"] = manifest_to_json(ckpt.manifest);
  j["config"] = train_config_to_json(ckpt.config);
  return j;
}

Checkpoint checkpoint_from_json(const json& j) {
  try {
    if (j.value("format", "") != kFormat) throw CheckpointError("checkpoint: unrecognized format");
    if (j.at("version").get<int>() != kVersion) throw CheckpointError("checkpoint: unsupported version");
    Dims dims;
    const auto& jd = j.at("dims");
    dims.d_s = jd.at("d_s").get<std::size_t>();
    dims.d = jd.at("d").get<std::size_t>();
    dims.T = jd.at("T").get<std::size_t>();
    dims.C = jd.at("C").get<std::size_t>();
    Architecture arch;
    const auto& ja = j.at("architecture");
    arch.planner_hidden = ja.at("planner_hidden").get<std::vector<std::size_t>>();
    arch.predictor_hidden = ja.at("predictor_hidden").get<std::vector<std::size_t>>();
    arch.time_embedding_dim = ja.at("time_embedding_dim").get<std::size_t>();
    if (!j.at("tau").is_number()) throw CheckpointError("checkpoint: tau is not a number");
    Checkpoint ckpt;
    ckpt.models = init_models(dims, 0, arch, j.at("tau").get<double>());
    matrix_from_json(j.at("alpha"), ckpt.models.selector.alpha.value, "alpha");
    mlp_from_json(j.at("planner"), ckpt.models.planner.mlp(), "planner");
    mlp_from_json(j.at("predictor"), ckpt.models.predictor.mlp(), "predictor");
    ckpt.models.zero_grad();
    try {
      ckpt.manifest = manifest_from_json(j.at("manifest"));
      ckpt.config = train_config_from_json(j.at("config"));
    } catch (const Error& e) {
      throw CheckpointError(std::string("checkpoint: ") + e.what());
    }
    if (!(ckpt.manifest.dims == dims)) throw CheckpointError("checkpoint: manifest dims disagree with model dims");
    return ckpt;
  } catch (const json::exception& e) {
    throw CheckpointError(std::string("checkpoint: malformed: ") + e.what());
  } catch (const ConfigError& e) {
    throw CheckpointError(std::string("checkpoint: ") + e.what());
  }
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  if (!ckpt.models.all_finite()) throw CheckpointError("checkpoint: refusing to save non-finite parameters");
  std::ofstream out(path);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  out << checkpoint_to_json(ckpt).dump() << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw CheckpointError(path.string() + ": " + e.what());
  }
  return checkpoint_from_json(j);
}

}  // namespace react
