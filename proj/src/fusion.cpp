// Copyright 2026 The ttafuse Authors. All Rights Reserved.
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


#include "ttafuse/fusion.hpp"

#include <cmath>

#include "ttafuse/parallel.hpp"

namespace ttafuse {

void CoefficientVector::validate() const {
  if (omegas.size() < 1) throw ParameterError("coefficient vector is empty");
  if (!(n > 0.0) || !std::isfinite(n)) throw ParameterError("normalizer n must be positive");
  if (!omegas.allFinite() || (omegas.array() < 0.0).any()) {
    throw ParameterError("coefficients must be finite and nonnegative");
  }
  const double sum = omegas.sum();
  if (std::abs(sum - n) > kSimplexTolerance * n) {
    throw ParameterError("coefficients sum to " + std::to_string(sum) + ", expected n = " +
                         std::to_string(n));
  }
}

CoefficientVector CoefficientVector::uniform(Index m) {
  return {Eigen::VectorXd::Ones(m), static_cast<double>(m)};
}

CoefficientVector CoefficientVector::one_hot(Index m, Index index, double n) {
  CoefficientVector w{Eigen::VectorXd::Zero(m), n};
  w.omegas[index] = n;
  return w;
}

void PredictionSet::validate() const {
  if (maps.empty()) throw ParameterError("prediction set is empty");
  for (const auto& map : maps) {
    if (!geometry_match(map, maps.front())) {
      throw ContractViolation("prediction maps of case " + case_id + " differ in geometry");
    }
    if (map.data.size() != map.geometry.voxel_count()) {
      throw ContractViolation("prediction map data length does not match dims");
    }
    if (!map.data.allFinite() || (map.data < 0.0f).any() || (map.data > 1.0f).any()) {
      throw ContractViolation("prediction map of case " + case_id + " leaves [0, 1]");
    }
  }
}

Volume3D fuse(const PredictionSet& preds, const CoefficientVector& w) {
  w.validate();
  if (static_cast<std::size_t>(w.size()) != preds.size()) {
    throw ParameterError("fuse: " + std::to_string(w.size()) + " coefficients for " +
                         std::to_string(preds.size()) + " prediction maps");
  }
  preds.validate();
  const Index voxels = preds.maps.front().size();
  Eigen::ArrayXd acc = Eigen::ArrayXd::Zero(voxels);
  for (std::size_t i = 0; i < preds.size(); ++i) {
    acc += w.omegas[static_cast<Index>(i)] * preds.maps[i].data.cast<double>();
  }
  Volume3D out(preds.geometry());
  out.data = (acc / w.n).cast<float>().max(0.0f).min(1.0f);
  return out;
}

MaskVolume binarize(const Volume3D& prob, double theta) {
  if (!(theta > 0.0 && theta < 1.0)) throw ParameterError("threshold must lie in (0, 1)");
  MaskVolume mask(prob.geometry);
  for (Index i = 0; i < prob.size(); ++i) {
    mask.data[i] = static_cast<double>(prob.data[i]) >= theta ? 1 : 0;
  }
  return mask;
}

PredictionSet aligned_predictions(const PredictorBinding& binding, const Volume3D& ct,
                                  const Volume3D& pet, const AugmentationSet& augs,
                                  const std::string& case_id, unsigned jobs) {
  if (!geometry_match(ct, pet)) throw ParameterError("CT and PET geometry differ");
  augs.validate();
  PredictionSet set{case_id, std::vector<Volume3D>(augs.size())};
  parallel_for(augs.size(), jobs, [&](std::size_t i) {
    const auto& spec = augs[i];
    const auto [ct_i, pet_i] = apply(spec, ct, pet);
    const Volume3D prob = predict(binding, ct_i, pet_i, case_id, static_cast<int>(i));
    Volume3D aligned = invert_on_prediction(spec, prob);
    if ((aligned.dims() != ct.dims()).any()) {
      throw ContractViolation("aligned prediction " + std::to_string(i) + " of case " + case_id +
                              " does not match the input dims");
    }
    aligned.geometry = ct.geometry;
    set.maps[i] = std::move(aligned);
  });
  return set;
}

TtaResult tta_fuse(const PredictorBinding& binding, const Volume3D& ct, const Volume3D& pet,
                   const AugmentationSet& augs, const CoefficientVector& w, double theta,
                   const std::string& case_id, unsigned jobs) {
  w.validate();
  if (static_cast<std::size_t>(w.size()) != augs.size()) {
    throw ParameterError("coefficient count does not match augmentation count");
  }
  if (!(theta > 0.0 && theta < 1.0)) throw ParameterError("threshold must lie in (0, 1)");
  const PredictionSet preds = aligned_predictions(binding, ct, pet, augs, case_id, jobs);
  TtaResult result;
  result.probability = fuse(preds, w);
  result.mask = binarize(result.probability, theta);
  return result;
}

MaskVolume tta_predict(const PredictorBinding& binding, const Volume3D& ct, const Volume3D& pet,
                       const AugmentationSet& augs, const CoefficientVector& w, double theta,
                       const std::string& case_id, unsigned jobs) {
  return tta_fuse(binding, ct, pet, augs, w, theta, case_id, jobs).mask;
}

nlohmann::ordered_json to_json(const CoefficientVector& w) {
  nlohmann::ordered_json j;
  j["n"] = w.n;
  j["omegas"] = std::vector<double>(w.omegas.data(), w.omegas.data() + w.omegas.size());
  return j;
}

CoefficientVector coefficients_from_json(const nlohmann::json& j) {
  CoefficientVector w;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key != "n" && key != "omegas") {
        throw ParseError("unknown key '" + key + "' in coefficients");
      }
    }
    w.n = j.at("n").get<double>();
    const auto omegas = j.at("omegas").get<std::vector<double>>();
    w.omegas = Eigen::Map<const Eigen::VectorXd>(omegas.data(), static_cast<Index>(omegas.size()));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed coefficients: ") + e.what());
  }
  w.validate();
  return w;
}

}  // namespace ttafuse
