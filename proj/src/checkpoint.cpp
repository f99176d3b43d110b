// Copyright 2026 The PAL Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "pal/checkpoint.hpp"

#include <fstream>

#include "pal/errors.hpp"
#include "pal/pale_io.hpp"
#include "pal/vendor_json.hpp"

namespace pal {
namespace {

using nlohmann::json;

struct TensorWriter {
  std::filesystem::path dir;
  std::string stem;

  std::string write(const Eigen::MatrixXd& m, const std::string& name) const {
    const std::string file = stem + "." + name + ".pale";
    save_tensor(m, dir / file);
    return file;
  }
};

json mlp_to_json(const MlpParams& p, const TensorWriter& out, const std::string& name) {
  json layers = json::array();
  for (std::size_t i = 0; i < p.layers.size(); ++i) {
    const auto& l = p.layers[i];
    const std::string base = name + "." + std::to_string(i);
    json lj = {{"in", l.weight.cols()},
               {"out", l.weight.rows()},
               {"weight", out.write(l.weight, base + ".weight")}};
    lj["bias"] = l.has_bias() ? json(out.write(l.bias, base + ".bias")) : json(nullptr);
    layers.push_back(std::move(lj));
  }
  return {{"activation", std::string(to_string(p.activation))},
          {"activate_output", p.activate_output},
          {"residual", p.residual},
          {"dropout_rate", p.dropout_rate},
          {"layers", std::move(layers)}};
}

MlpParams mlp_from_json(const json& j, const std::filesystem::path& dir) {
  MlpParams p;
  p.activation = parse_activation(j.at("activation").get<std::string>());
  p.activate_output = j.at("activate_output").get<bool>();
  p.residual = j.at("residual").get<bool>();
  p.dropout_rate = j.at("dropout_rate").get<double>();
  for (const auto& lj : j.at("layers")) {
    DenseLayer l;
    l.weight = load_tensor(dir / lj.at("weight").get<std::string>());
    if (!lj.at("bias").is_null())
      l.bias = load_tensor(dir / lj.at("bias").get<std::string>()).col(0);
    if (l.weight.cols() != lj.at("in").get<Eigen::Index>() ||
        l.weight.rows() != lj.at("out").get<Eigen::Index>())
      throw FormatError("checkpoint layer shape disagrees with its tensor file");
    p.layers.push_back(std::move(l));
  }
  p.validate();
  return p;
}

}  // namespace

void save_model(const PalModel& model, const std::filesystem::path& header_path) {
  model.validate();
  const TensorWriter out{header_path.parent_path(), header_path.stem().string()};
  json j;
  j["format"] = "pal-checkpoint";
  j["version"] = 1;
  j["variant"] = std::string(to_string(model.variant));
  j["item_dim"] = model.item_dim;
  j["context_dim"] = model.context_dim;
  j["num_prototypes"] = model.num_prototypes();
  j["flip_b_order"] = model.flip_b_order;
  j["f"] = mlp_to_json(model.f, out, "f");
  if (model.variant == Variant::kA) {
    j["prototypes"] = out.write(model.prototypes, "prototypes");
  } else {
    json g = json::array();
    for (std::size_t k = 0; k < model.g.size(); ++k)
      g.push_back(mlp_to_json(model.g[k], out, "g" + std::to_string(k)));
    j["g"] = std::move(g);
  }
  j["weights"] = out.write(model.weights.matrix(), "weights");
  j["users"] = model.weights.users();
  std::ofstream os(header_path, std::ios::trunc);
  if (!os) throw IoError("cannot open '" + header_path.string() + "' for writing");
  os << j.dump(1) << '\n';
}

PalModel load_model(const std::filesystem::path& header_path) {
  std::ifstream is(header_path);
  if (!is) throw IoError("cannot open '" + header_path.string() + "'");
  const auto dir = header_path.parent_path();
  try {
    const json j = json::parse(is);
    if (j.value("format", std::string()) != "pal-checkpoint")
      throw FormatError("'" + header_path.string() + "' is not a PAL checkpoint");
    PalModel m;
    m.variant = parse_variant(j.at("variant").get<std::string>());
    m.item_dim = j.at("item_dim").get<int>();
    m.context_dim = j.at("context_dim").get<int>();
    m.flip_b_order = j.value("flip_b_order", false);
    m.f = mlp_from_json(j.at("f"), dir);
    if (m.variant == Variant::kA) {
      m.prototypes = load_tensor(dir / j.at("prototypes").get<std::string>());
    } else {
      for (const auto& gj : j.at("g")) m.g.push_back(mlp_from_json(gj, dir));
    }
    m.weights = UserWeightTable(load_tensor(dir / j.at("weights").get<std::string>()),
                                j.at("users").get<std::vector<std::string>>());
    m.validate();
    return m;
  } catch (const json::exception& e) {
    throw FormatError("'" + header_path.string() + "': " + e.what());
  }
}

}  // namespace pal
