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


#include "ttafuse/augment.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "ttafuse/random.hpp"

namespace ttafuse {
namespace {

using namespace transforms;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

std::pair<int, int> plane_axes(Plane p) {
  switch (p) {
    case Plane::kXY: return {0, 1};
    case Plane::kYZ: return {1, 2};
    case Plane::kXZ: return {0, 2};
  }
  return {0, 1};
}

template <typename Scalar>
Volume<Scalar> quarter_turn(const Volume<Scalar>& v, int a, int b) {
  const Dims& n = v.dims();
  Geometry g = v.geometry;
  std::swap(g.dims[a], g.dims[b]);
  std::swap(g.spacing[a], g.spacing[b]);
  Volume<Scalar> out(g);
  Dims q;
  for (q[2] = 0; q[2] < g.dims[2]; ++q[2]) {
    for (q[1] = 0; q[1] < g.dims[1]; ++q[1]) {
      for (q[0] = 0; q[0] < g.dims[0]; ++q[0]) {
        Dims p = q;
        p[a] = q[b];
        p[b] = n[b] - 1 - q[a];
        out(q[0], q[1], q[2]) = v(p[0], p[1], p[2]);
      }
    }
  }
  return out;
}

bool targets(Channel target, Channel channel) {
  return target == Channel::kBoth || target == channel;
}

Volume3D shift_intensity(const Volume3D& v, double fraction) {
  if (v.size() == 0) return v;
  const double range = static_cast<double>(v.data.maxCoeff()) - v.data.minCoeff();
  const auto offset = static_cast<float>(fraction * range);
  Volume3D out = v;
  out.data += offset;
  return out;
}

Volume3D add_noise(const Volume3D& v, double sigma, std::uint64_t seed) {
  if (sigma == 0.0) return v;
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, sigma);
  Volume3D out = v;
  for (Index i = 0; i < out.size(); ++i) out.data[i] += static_cast<float>(normal(rng));
  return out;
}

Channel channel_from_string(const std::string& s) {
  if (s == "ct") return Channel::kCt;
  if (s == "pet") return Channel::kPet;
  if (s == "both") return Channel::kBoth;
  throw ParseError("unknown channel target '" + s + "'");
}

Plane plane_from_string(const std::string& s) {
  if (s == "xy") return Plane::kXY;
  if (s == "yz") return Plane::kYZ;
  if (s == "xz") return Plane::kXZ;
  throw ParseError("unknown rotation plane '" + s + "'");
}

void reject_unknown_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed) {
  for (const auto& [key, value] : j.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
      throw ParseError("unknown key '" + key + "' in augmentation");
    }
  }
}

}  // namespace

std::string to_string(Channel c) {
  switch (c) {
    case Channel::kCt: return "ct";
    case Channel::kPet: return "pet";
    case Channel::kBoth: return "both";
  }
  return "both";
}

std::string to_string(Plane p) {
  switch (p) {
    case Plane::kXY: return "xy";
    case Plane::kYZ: return "yz";
    case Plane::kXZ: return "xz";
  }
  return "xy";
}

bool is_spatial(const TransformSpec& spec) {
  return std::holds_alternative<Flip>(spec.kind) || std::holds_alternative<Rotate90>(spec.kind) ||
         std::holds_alternative<Zoom>(spec.kind);
}

bool TransformSpec::operator==(const TransformSpec& o) const {
  if (kind != o.kind) return false;
  const bool intensity = std::holds_alternative<ShiftIntensity>(kind) ||
                         std::holds_alternative<GaussianNoise>(kind);
  return !intensity || target == o.target;
}

void TransformSpec::validate() const {
  std::visit(Overloaded{
                 [](const Identity&) {},
                 [](const Flip& f) {
                   if (f.axis < 1 || f.axis > 3) throw ParameterError("flip axis must be 1, 2 or 3");
                 },
                 [](const Rotate90& r) {
                   if (r.k < 1 || r.k > 3) throw ParameterError("rotate90 k must be 1, 2 or 3");
                 },
                 [](const ShiftIntensity& s) {
                   if (!(s.offset_fraction >= -1.0 && s.offset_fraction <= 1.0)) {
                     throw ParameterError("shift offset_fraction must lie in [-1, 1]");
                   }
                 },
                 [](const GaussianNoise& n) {
                   if (!(n.sigma >= 0.0) || !std::isfinite(n.sigma)) {
                     throw ParameterError("noise sigma must be finite and >= 0");
                   }
                 },
                 [](const Zoom& z) {
                   if (!(z.factor >= 0.5 && z.factor <= 2.0)) {
                     throw ParameterError("zoom factor must lie in [0.5, 2.0]");
                   }
                 },
             },
             kind);
}

std::string TransformSpec::describe() const {
  std::ostringstream os;
  std::visit(Overloaded{
                 [&](const Identity&) { os << "identity"; },
                 [&](const Flip& f) { os << "flip(axis=" << f.axis << ")"; },
                 [&](const Rotate90& r) {
                   os << "rotate90(plane=" << to_string(r.plane) << ",k=" << r.k << ")";
                 },
                 [&](const ShiftIntensity& s) {
                   os << "shift_intensity(offset=" << s.offset_fraction
                      << ",target=" << to_string(target) << ")";
                 },
                 [&](const GaussianNoise& n) {
                   os << "noise(sigma=" << n.sigma << ",seed=" << n.seed
                      << ",target=" << to_string(target) << ")";
                 },
                 [&](const Zoom& z) { os << "zoom(factor=" << z.factor << ")"; },
             },
             kind);
  return os.str();
}

void AugmentationSet::validate() const {
  if (specs.empty()) throw ParameterError("augmentation set is empty");
  if (!std::holds_alternative<Identity>(specs.front().kind)) {
    throw ParameterError("first augmentation must be identity");
  }
  for (std::size_t i = 0; i < specs.size(); ++i) {
    specs[i].validate();
    for (std::size_t j = 0; j < i; ++j) {
      if (specs[i] == specs[j]) {
        throw ParameterError("duplicate augmentation " + specs[i].describe());
      }
    }
  }
}

template <typename Scalar>
Volume<Scalar> flip(const Volume<Scalar>& v, int axis) {
  if (axis < 1 || axis > 3) throw ParameterError("flip axis must be 1, 2 or 3");
  const int a = axis - 1;
  const Dims& n = v.dims();
  Volume<Scalar> out(v.geometry);
  for (Index z = 0; z < n[2]; ++z) {
    for (Index y = 0; y < n[1]; ++y) {
      for (Index x = 0; x < n[0]; ++x) {
        Dims p(x, y, z);
        p[a] = n[a] - 1 - p[a];
        out(x, y, z) = v(p[0], p[1], p[2]);
      }
    }
  }
  return out;
}

template <typename Scalar>
Volume<Scalar> rotate90(const Volume<Scalar>& v, Plane plane, int k) {
  const auto [a, b] = plane_axes(plane);
  k = ((k % 4) + 4) % 4;
  Volume<Scalar> out = v;
  for (int i = 0; i < k; ++i) out = quarter_turn(out, a, b);
  return out;
}

template Volume<float> flip(const Volume<float>&, int);
template Volume<std::uint8_t> flip(const Volume<std::uint8_t>&, int);
template Volume<float> rotate90(const Volume<float>&, Plane, int);
template Volume<std::uint8_t> rotate90(const Volume<std::uint8_t>&, Plane, int);

Volume3D zoom(const Volume3D& v, double factor) {
  if (!(factor > 0.0)) throw ParameterError("zoom factor must be positive");
  const Dims& n = v.dims();
  const Eigen::Array3d centre = (n.cast<double>() - 1.0) / 2.0;
  const double inv = 1.0 / factor;
  Volume3D out(v.geometry);

  auto sample = [&](Index x, Index y, Index z) -> double {
    if (x < 0 || y < 0 || z < 0 || x >= n[0] || y >= n[1] || z >= n[2]) return 0.0;
    return v(x, y, z);
  };

  for (Index z = 0; z < n[2]; ++z) {
    const double sz = centre[2] + (z - centre[2]) * inv;
    const double fz = std::floor(sz);
    const auto z0 = static_cast<Index>(fz);
    const double tz = sz - fz;
    for (Index y = 0; y < n[1]; ++y) {
      const double sy = centre[1] + (y - centre[1]) * inv;
      const double fy = std::floor(sy);
      const auto y0 = static_cast<Index>(fy);
      const double ty = sy - fy;
      for (Index x = 0; x < n[0]; ++x) {
        const double sx = centre[0] + (x - centre[0]) * inv;
        const double fx = std::floor(sx);
        const auto x0 = static_cast<Index>(fx);
        const double tx = sx - fx;
        const double c00 = sample(x0, y0, z0) * (1 - tx) + sample(x0 + 1, y0, z0) * tx;
        const double c10 = sample(x0, y0 + 1, z0) * (1 - tx) + sample(x0 + 1, y0 + 1, z0) * tx;
        const double c01 = sample(x0, y0, z0 + 1) * (1 - tx) + sample(x0 + 1, y0, z0 + 1) * tx;
        const double c11 =
            sample(x0, y0 + 1, z0 + 1) * (1 - tx) + sample(x0 + 1, y0 + 1, z0 + 1) * tx;
        const double c0 = c00 * (1 - ty) + c10 * ty;
        const double c1 = c01 * (1 - ty) + c11 * ty;
        out(x, y, z) = static_cast<float>(c0 * (1 - tz) + c1 * tz);
      }
    }
  }
  return out;
}

Volume3D apply_spatial(const TransformSpec& spec, const Volume3D& vol) {
  return std::visit(Overloaded{
                        [&](const Flip& f) { return flip(vol, f.axis); },
                        [&](const Rotate90& r) { return rotate90(vol, r.plane, r.k); },
                        [&](const Zoom& z) { return zoom(vol, z.factor); },
                        [&](const auto&) { return vol; },
                    },
                    spec.kind);
}

std::pair<Volume3D, Volume3D> apply(const TransformSpec& spec, const Volume3D& ct,
                                    const Volume3D& pet) {
  if (!geometry_match(ct, pet)) throw ParameterError("apply: CT and PET geometry differ");
  spec.validate();
  if (is_spatial(spec)) return {apply_spatial(spec, ct), apply_spatial(spec, pet)};

  return std::visit(
      Overloaded{
          [&](const ShiftIntensity& s) -> std::pair<Volume3D, Volume3D> {
            return {targets(spec.target, Channel::kCt) ? shift_intensity(ct, s.offset_fraction) : ct,
                    targets(spec.target, Channel::kPet) ? shift_intensity(pet, s.offset_fraction)
                                                        : pet};
          },
          [&](const GaussianNoise& n) -> std::pair<Volume3D, Volume3D> {
            return {targets(spec.target, Channel::kCt)
                        ? add_noise(ct, n.sigma, mix_seed(n.seed, 0))
                        : ct,
                    targets(spec.target, Channel::kPet)
                        ? add_noise(pet, n.sigma, mix_seed(n.seed, 1))
                        : pet};
          },
          [&](const auto&) -> std::pair<Volume3D, Volume3D> { return {ct, pet}; },
      },
      spec.kind);
}

Volume3D invert_on_prediction(const TransformSpec& spec, const Volume3D& prob) {
  return std::visit(Overloaded{
                        [&](const Flip& f) { return flip(prob, f.axis); },
                        [&](const Rotate90& r) { return rotate90(prob, r.plane, 4 - r.k); },
                        [&](const Zoom& z) { return zoom(prob, 1.0 / z.factor); },
                        [&](const auto&) { return prob; },
                    },
                    spec.kind);
}

AugmentationSet default_augmentation_set() {
  AugmentationSet set;
  set.specs = {
      {Identity{}},
      {Flip{1}},
      {Flip{2}},
      {Flip{3}},
      {Rotate90{Plane::kXY, 1}},
      {ShiftIntensity{0.10}, Channel::kCt},
      {ShiftIntensity{0.10}, Channel::kPet},
      {GaussianNoise{0.05, 7}, Channel::kCt},
      {GaussianNoise{0.05, 7}, Channel::kPet},
      {Zoom{1.1}},
      {Zoom{0.9}},
  };
  return set;
}

nlohmann::ordered_json to_json(const TransformSpec& spec) {
  nlohmann::ordered_json j;
  std::visit(Overloaded{
                 [&](const Identity&) { j["kind"] = "identity"; },
                 [&](const Flip& f) {
                   j["kind"] = "flip";
                   j["axis"] = f.axis;
                 },
                 [&](const Rotate90& r) {
                   j["kind"] = "rotate90";
                   j["plane"] = to_string(r.plane);
                   j["k"] = r.k;
                 },
                 [&](const ShiftIntensity& s) {
                   j["kind"] = "shift_intensity";
                   j["offset_fraction"] = s.offset_fraction;
                   j["target"] = to_string(spec.target);
                 },
                 [&](const GaussianNoise& n) {
                   j["kind"] = "noise";
                   j["sigma"] = n.sigma;
                   j["seed"] = n.seed;
                   j["target"] = to_string(spec.target);
                 },
                 [&](const Zoom& z) {
                   j["kind"] = "zoom";
                   j["factor"] = z.factor;
                 },
             },
             spec.kind);
  return j;
}

TransformSpec transform_from_json(const nlohmann::json& j) {
  TransformSpec spec;
  try {
    if (!j.is_object()) throw ParseError("augmentation entry must be an object");
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "identity") {
      reject_unknown_keys(j, {"kind"});
      spec.kind = Identity{};
    } else if (kind == "flip") {
      reject_unknown_keys(j, {"kind", "axis"});
      spec.kind = Flip{j.at("axis").get<int>()};
    } else if (kind == "rotate90") {
      reject_unknown_keys(j, {"kind", "plane", "k"});
      spec.kind = Rotate90{plane_from_string(j.value("plane", std::string("xy"))),
                           j.value("k", 1)};
    } else if (kind == "shift_intensity") {
      reject_unknown_keys(j, {"kind", "offset_fraction", "target"});
      spec.kind = ShiftIntensity{j.at("offset_fraction").get<double>()};
      spec.target = channel_from_string(j.value("target", std::string("both")));
    } else if (kind == "noise") {
      reject_unknown_keys(j, {"kind", "sigma", "seed", "target"});
      spec.kind = GaussianNoise{j.at("sigma").get<double>(), j.value<std::uint64_t>("seed", 7)};
      spec.target = channel_from_string(j.value("target", std::string("both")));
    } else if (kind == "zoom") {
      reject_unknown_keys(j, {"kind", "factor"});
      spec.kind = Zoom{j.at("factor").get<double>()};
    } else {
      throw ParseError("unknown augmentation kind '" + kind + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed augmentation: ") + e.what());
  }
  spec.validate();
  return spec;
}

nlohmann::ordered_json to_json(const AugmentationSet& augs) {
  auto j = nlohmann::ordered_json::array();
  for (const auto& s : augs.specs) j.push_back(to_json(s));
  return j;
}

AugmentationSet augmentations_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw ParseError("augmentations must be a JSON array");
  AugmentationSet set;
  for (const auto& entry : j) set.specs.push_back(transform_from_json(entry));
  set.validate();
  return set;
}

}  // namespace ttafuse
