#pragma once

#include <json.hpp>

#include "icf/policy.hpp"
#include "icf/state.hpp"

// nlohmann ADL converters for the core value types. Device ids travel as
// 32-char hex strings, byte strings as hex, undefined as JSON null.
namespace icf {

std::string category_name(ControllerCategory c);
ControllerCategory category_from_name(const std::string& s);
std::string purpose_name(Purpose p);
Purpose purpose_from_name(const std::string& s);
std::string recipient_name(Recipient r);
Recipient recipient_from_name(const std::string& s);

void to_json(nlohmann::json& j, const Policy& p);
void from_json(const nlohmann::json& j, Policy& p);

void to_json(nlohmann::json& j, const SubjectId& s);
void from_json(const nlohmann::json& j, SubjectId& s);

void to_json(nlohmann::json& j, const DeviceInfo& d);
void from_json(const nlohmann::json& j, DeviceInfo& d);

void to_json(nlohmann::json& j, const Declaration& d);
void from_json(const nlohmann::json& j, Declaration& d);

nlohmann::json maybe_policy_to_json(const MaybePolicy& p);
MaybePolicy maybe_policy_from_json(const nlohmann::json& j);
nlohmann::json maybe_value_to_json(const MaybeValue& v);
MaybeValue maybe_value_from_json(const nlohmann::json& j);

}  // namespace icf
