#include "ergo/observables.hpp"

#include <cmath>
#include <cstdlib>
#include <sstream>
#include <stdexcept>

namespace ergo {

double Observable::derivative_norm(int order) const {
  if (!is_trig) return sup_norm;  // constants: all derivatives vanish
  double kmax = 0.0;
  for (int i = 0; i < freq.n; ++i) kmax = std::max(kmax, std::abs(freq[i]));
  return std::max(1.0, std::pow(kmax, order));
}

namespace {

std::vector<int> parse_freq(const std::string& spec, int d) {
  std::vector<int> k;
  std::stringstream ss(spec);
  std::string part;
  while (std::getline(ss, part, '_')) {
    if (part.empty()) throw std::invalid_argument("bad observable frequency: " + spec);
    k.push_back(std::stoi(part));
  }
  if (static_cast<int>(k.size()) != d)
    throw std::invalid_argument("observable frequency dimension mismatch: " + spec);
  return k;
}

Observable make_trig(bool cosine, const std::vector<int>& k, const std::string& label) {
  Observable obs;
  obs.label = label;
  obs.is_trig = true;
  obs.sup_norm = 1.0;
  obs.freq = SmallVec(static_cast<int>(k.size()));
  for (size_t i = 0; i < k.size(); ++i) obs.freq[static_cast<int>(i)] = k[i];
  const SmallVec freq = obs.freq;
  if (cosine) {
    obs.eval = [freq](const TorusPoint& x) {
      double phase = 0;
      for (int i = 0; i < freq.n; ++i) phase += freq[i] * x[i];
      return std::cos(phase);
    };
  } else {
    obs.eval = [freq](const TorusPoint& x) {
      double phase = 0;
      for (int i = 0; i < freq.n; ++i) phase += freq[i] * x[i];
      return std::sin(phase);
    };
  }
  return obs;
}

}  // namespace

Observable observable_by_id(const std::string& id, int d) {
  if (id == "const" || id == "one") {
    Observable obs;
    obs.label = "const";
    obs.eval = [](const TorusPoint&) { return 1.0; };
    obs.sup_norm = 1.0;
    return obs;
  }
  if (id.rfind("cos_", 0) == 0) return make_trig(true, parse_freq(id.substr(4), d), id);
  if (id.rfind("sin_", 0) == 0) return make_trig(false, parse_freq(id.substr(4), d), id);
  throw std::invalid_argument("unknown observable id: " + id);
}

std::vector<Observable> distance_dictionary(int d) {
  std::vector<std::string> ids;
  if (d == 1) {
    ids = {"cos_1", "sin_1", "cos_2", "sin_2", "cos_3", "sin_3", "cos_4", "sin_4"};
  } else if (d == 2) {
    ids = {"cos_1_0", "sin_1_0", "cos_0_1", "sin_0_1",
           "cos_1_1", "sin_1_1", "cos_2_0", "cos_1_-1"};
  } else {
    throw std::invalid_argument("distance dictionary supports d in {1, 2}");
  }
  std::vector<Observable> dict;
  dict.reserve(ids.size());
  for (const auto& id : ids) dict.push_back(observable_by_id(id, d));
  return dict;
}

}  // namespace ergo
