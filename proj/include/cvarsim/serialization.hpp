#pragma once

#include <string>

#include <json.hpp>

#include "cvarsim/envs.hpp"

namespace cvarsim {

// MDP wire format:
//   {"S":., "A":., "H":., "s1":., "P":[[[...]]], "R":[[[{"v":., "p":.}]]]}
// P[h][s][a] is a probability row over states and R[h][s][a] an atom list.
nlohmann::json mdp_to_json(const TabularMdp& mdp);
TabularMdp mdp_from_json(const nlohmann::json& j);

// Bandit wire format: {"arms": [[{"v":., "p":.}], ...]}.
nlohmann::json mab_to_json(const MabInstance& mab);
MabInstance mab_from_json(const nlohmann::json& j);

nlohmann::json load_json_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace cvarsim
