#include "cvarsim/serialization.hpp"

#include <fstream>

namespace cvarsim {

namespace {

nlohmann::json dist_to_json(const FiniteDist& dist) {
  nlohmann::json arr = nlohmann::json::array();
  for (const Atom& a : dist.atoms()) {
    arr.push_back({{"v", a.value}, {"p", a.prob}});
  }
  return arr;
}

FiniteDist dist_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.empty()) throw ConfigError("atom list must be a non-empty array");
  std::vector<Atom> atoms;
  atoms.reserve(j.size());
  for (const auto& a : j) {
    if (!a.contains("v") || !a.contains("p")) {
      throw ConfigError("atom needs fields \"v\" and \"p\"");
    }
    atoms.push_back({a.at("v").get<double>(), a.at("p").get<double>()});
  }
  try {
    return FiniteDist(std::move(atoms));
  } catch (const ArgumentError& e) {
    throw ConfigError(std::string("invalid distribution: ") + e.what());
  }
}

}  // namespace

nlohmann::json mdp_to_json(const TabularMdp& mdp) {
  nlohmann::json p = nlohmann::json::array();
  nlohmann::json r = nlohmann::json::array();
  for (int h = 1; h <= mdp.H; ++h) {
    nlohmann::json ph = nlohmann::json::array();
    nlohmann::json rh = nlohmann::json::array();
    for (int s = 0; s < mdp.S; ++s) {
      nlohmann::json ps = nlohmann::json::array();
      nlohmann::json rs = nlohmann::json::array();
      for (int a = 0; a < mdp.A; ++a) {
        nlohmann::json row = nlohmann::json::array();
        for (int s2 = 0; s2 < mdp.S; ++s2) row.push_back(mdp.p(h, s, a, s2));
        ps.push_back(std::move(row));
        rs.push_back(dist_to_json(mdp.reward(h, s, a)));
      }
      ph.push_back(std::move(ps));
      rh.push_back(std::move(rs));
    }
    p.push_back(std::move(ph));
    r.push_back(std::move(rh));
  }
  return {{"S", mdp.S}, {"A", mdp.A}, {"H", mdp.H}, {"s1", mdp.s1},
          {"P", std::move(p)}, {"R", std::move(r)}};
}

TabularMdp mdp_from_json(const nlohmann::json& j) {
  for (const char* key : {"S", "A", "H", "s1", "P", "R"}) {
    if (!j.contains(key)) throw ConfigError(std::string("MDP json missing \"") + key + "\"");
  }
  TabularMdp mdp;
  mdp.S = j.at("S").get<int>();
  mdp.A = j.at("A").get<int>();
  mdp.H = j.at("H").get<int>();
  mdp.s1 = j.at("s1").get<int>();
  if (mdp.S < 1 || mdp.A < 1 || mdp.H < 1 || mdp.s1 < 0 || mdp.s1 >= mdp.S) {
    throw ConfigError("MDP json has an invalid shape");
  }
  const auto& P = j.at("P");
  const auto& R = j.at("R");
  if (P.size() != static_cast<std::size_t>(mdp.H) ||
      R.size() != static_cast<std::size_t>(mdp.H)) {
    throw ConfigError("P/R must have H layers");
  }
  const std::size_t cells = static_cast<std::size_t>(mdp.H) * mdp.S * mdp.A;
  mdp.P.assign(cells * mdp.S, 0.0);
  mdp.R.assign(cells, FiniteDist::point_mass(0.0));
  for (int h = 1; h <= mdp.H; ++h) {
    const auto& ph = P.at(static_cast<std::size_t>(h - 1));
    const auto& rh = R.at(static_cast<std::size_t>(h - 1));
    if (ph.size() != static_cast<std::size_t>(mdp.S) ||
        rh.size() != static_cast<std::size_t>(mdp.S)) {
      throw ConfigError("P/R layer does not have S rows");
    }
    for (int s = 0; s < mdp.S; ++s) {
      const auto& ps = ph.at(static_cast<std::size_t>(s));
      const auto& rs = rh.at(static_cast<std::size_t>(s));
      if (ps.size() != static_cast<std::size_t>(mdp.A) ||
          rs.size() != static_cast<std::size_t>(mdp.A)) {
        throw ConfigError("P/R row does not have A entries");
      }
      for (int a = 0; a < mdp.A; ++a) {
        const auto& row = ps.at(static_cast<std::size_t>(a));
        if (row.size() != static_cast<std::size_t>(mdp.S)) {
          throw ConfigError("transition row does not have S entries");
        }
        for (int s2 = 0; s2 < mdp.S; ++s2) {
          mdp.p_ref(h, s, a, s2) = row.at(static_cast<std::size_t>(s2)).get<double>();
        }
        mdp.reward_ref(h, s, a) = dist_from_json(rs.at(static_cast<std::size_t>(a)));
      }
    }
  }
  try {
    mdp.validate();
  } catch (const ArgumentError& e) {
    throw ConfigError(std::string("invalid MDP: ") + e.what());
  }
  return mdp;
}

nlohmann::json mab_to_json(const MabInstance& mab) {
  nlohmann::json arms = nlohmann::json::array();
  for (const FiniteDist& arm : mab.arms) arms.push_back(dist_to_json(arm));
  return {{"arms", std::move(arms)}};
}

MabInstance mab_from_json(const nlohmann::json& j) {
  if (!j.contains("arms") || !j.at("arms").is_array() || j.at("arms").empty()) {
    throw ConfigError("bandit json needs a non-empty \"arms\" array");
  }
  MabInstance mab;
  for (const auto& arm : j.at("arms")) mab.arms.push_back(dist_from_json(arm));
  try {
    mab.validate();
  } catch (const ArgumentError& e) {
    throw ConfigError(std::string("invalid bandit: ") + e.what());
  }
  return mab;
}

nlohmann::json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return j;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path);
  out << text;
}

}  // namespace cvarsim
