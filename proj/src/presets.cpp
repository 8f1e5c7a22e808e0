#include "mvsteady/presets.hpp"

#include "mvsteady/config.hpp"

namespace mvsteady {

using nlohmann::json;

namespace {

json hkb(double kappa) {
  return {
      {"model", {{"name", "hkb"}, {"params", {{"alpha", -1.0}, {"kappa", kappa}}}}},
      {"discretization", {{"modes_per_axis", 32}, {"quadrature_points", 104}, {"beta_inv", 1.0}}},
      {"deflation", {{"guesses", json::array({json{{"kind", "zero"}}})}}},
  };
}

json hkb_asymmetric() {
  json j = hkb(2.0);
  j["deflation"]["guesses"] = json::array({json{{"kind", "random"}}, json{{"kind", "zero"}}});
  j["sweep"] = {{"parameter", "model.kappa"}, {"values", {2.0, 4.0, 5.0}}};
  return j;
}

json o2_sweep() {
  return {
      {"model", {{"name", "o2"}, {"params", {{"eta", 0.05}}}}},
      {"discretization", {{"modes_per_axis", 32}, {"quadrature_points", 104}}},
      {"deflation", {{"guesses", json::array({json{{"kind", "uniform"}}})}}},
      {"stability", {{"horizon", 2.0}}},
      {"sweep", {{"parameter", "beta_inv"}, {"values", {0.415, 0.4, 0.25}}}},
  };
}

json hk() {
  const json start = {{"kind", "uniform"},
                      {"offsets", json::array({json{{"index", 1}, {"value", 0.01}}, json{{"index", 4}, {"value", 0.005}}})}};
  const json target = {{"select", "all"}, {"index", 0}, {"include_rejected", true}};
  return {
      {"model", {{"name", "hk"}, {"params", {{"r", 0.1}, {"epsilon", 0.005}}}}},
      {"discretization", {{"modes_per_axis", 32}, {"quadrature_points", 200}, {"beta_inv", 3e-4}}},
      {"deflation",
       {{"max_roots", 1},
        {"guesses", json::array({json{{"kind", "fixed_point"},
                                      {"seed", json::array({json{{"wavenumber", {2}}, {"amplitude", 0.3}}})},
                                      {"damping", 0.5}}})}}},
      {"evolve", {{"t_end", 50.0}, {"dt", 0.1}, {"initial", start}, {"reference", target}}},
      {"control",
       {{"target", target},
        {"initial", start},
        {"gamma", 0.01},
        {"eta", 100.0},
        {"delta", 1e-3},
        {"smoothing", 0.1},
        {"tol_u", 1e-8},
        {"max_iter", 20},
        {"dt", 0.1},
        {"window", 5.0},
        {"span", 50.0},
        {"n_steps", 25}}},
      {"output", {{"snapshot_stride", 10}}},
  };
}

json von_mises() {
  return {
      {"model", {{"name", "von_mises"}, {"params", {{"theta", 1.0}}}}},
      {"discretization", {{"modes_per_axis", 5}, {"quadrature_points", 24}}},
      {"deflation",
       {{"max_roots", 8},
        {"guesses", json::array({json{{"kind", "fixed_point"},
                                      {"seed", json::array({json{{"wavenumber", {1, 0}}, {"amplitude", 0.1}},
                                                            json{{"wavenumber", {0, 1}}, {"amplitude", 0.05}, {"phase", 0.3}}})}},
                                 json{{"kind", "uniform"}}})}}},
      {"sweep", {{"parameter", "beta_inv"}, {"values", {0.5, 0.2}}}},
  };
}

json von_mises_control() {
  const json start = {{"kind", "uniform"},
                      {"modulation", json::array({json{{"wavenumber", {1, 0}}, {"amplitude", 0.4}, {"phase", 0.5}},
                                                  json{{"wavenumber", {0, 1}}, {"amplitude", 0.4}, {"phase", -1.0}}})}};
  return {
      {"model", {{"name", "von_mises"}, {"params", {{"theta", 1.0}}}}},
      {"discretization", {{"modes_per_axis", 3}, {"quadrature_points", 24}, {"beta_inv", 0.3701}}},
      {"deflation", {{"max_roots", 1}, {"guesses", json::array({json{{"kind", "uniform"}}})}}},
      {"evolve", {{"t_end", 1.0}, {"dt", 0.01}, {"initial", start}, {"reference", {{"select", "uniform"}}}}},
      {"control",
       {{"target", {{"select", "uniform"}}},
        {"initial", start},
        {"gamma", 0.001},
        {"eta", 1000.0},
        {"delta", 1.0},
        {"tol_u", 1e-20},
        {"max_iter", 10},
        {"dt", 0.01},
        {"window", 0.1},
        {"span", 1.0},
        {"n_steps", 100}}},
      {"output", {{"snapshot_stride", 10}}},
  };
}

}  // namespace

std::vector<std::string> preset_names() {
  return {"hkb-k1", "hkb-k3", "hkb-asym", "o2-sweep", "hk", "von_mises", "von_mises-control"};
}

json preset(const std::string& name) {
  if (name == "hkb-k1") return hkb(1.0);
  if (name == "hkb-k3") return hkb(3.0);
  if (name == "hkb-asym") return hkb_asymmetric();
  if (name == "o2-sweep") return o2_sweep();
  if (name == "hk") return hk();
  if (name == "von_mises") return von_mises();
  if (name == "von_mises-control") return von_mises_control();
  std::string known;
  for (const auto& n : preset_names()) known += (known.empty() ? "" : ", ") + n;
  throw ConfigError("unknown preset '" + name + "' (known: " + known + ")");
}

}  // namespace mvsteady
