#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace proverbkit {

enum class Role { kSystem, kUser, kAssistant };

std::string_view to_string(Role role);
Role role_from_string(std::string_view text);

/// One message of a chat transcript; serialized as {role, content}.
struct ChatTurn {
  Role role = Role::kUser;
  std::string content;

  friend bool operator==(const ChatTurn&, const ChatTurn&) = default;
};

using Transcript = std::vector<ChatTurn>;

void to_json(nlohmann::json& j, const ChatTurn& turn);
void from_json(const nlohmann::json& j, ChatTurn& turn);

}  // namespace proverbkit
