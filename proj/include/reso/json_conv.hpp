#pragma once

#include <json.hpp>

#include "reso/config.hpp"

namespace reso {

inline void to_json(nlohmann::json& j, const ModelConfig& c) {
    j = {{"input_len", c.input_len}, {"horizon", c.horizon},     {"width", c.width},
         {"heads", c.heads},         {"dropout", c.dropout},     {"kernel", c.kernel},
         {"dilations", c.dilations}, {"lstm_hidden", c.lstm_hidden},
         {"mlp_hidden", c.mlp_hidden}};
}

inline void from_json(const nlohmann::json& j, ModelConfig& c) {
    j.at("input_len").get_to(c.input_len);
    j.at("horizon").get_to(c.horizon);
    j.at("width").get_to(c.width);
    j.at("heads").get_to(c.heads);
    j.at("dropout").get_to(c.dropout);
    j.at("kernel").get_to(c.kernel);
    j.at("dilations").get_to(c.dilations);
    j.at("lstm_hidden").get_to(c.lstm_hidden);
    j.at("mlp_hidden").get_to(c.mlp_hidden);
}

inline void to_json(nlohmann::json& j, const NormStats& s) {
    j = {{"rpm_mean", s.rpm_mean}, {"rpm_std", s.rpm_std},
         {"torque_mean", s.torque_mean}, {"torque_std", s.torque_std}};
}

inline void from_json(const nlohmann::json& j, NormStats& s) {
    j.at("rpm_mean").get_to(s.rpm_mean);
    j.at("rpm_std").get_to(s.rpm_std);
    j.at("torque_mean").get_to(s.torque_mean);
    j.at("torque_std").get_to(s.torque_std);
}

} // namespace reso
