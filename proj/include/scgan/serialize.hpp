#pragma once

#include <string>

#include "json.hpp"
#include "scgan/models.hpp"

namespace scgan {

// JSON round-trips for every config struct; used by checkpoints, manifests
// and the CLI config loader. Enum values serialize as strings.
void to_json(nlohmann::json& j, const CodeSpec& v);
void from_json(const nlohmann::json& j, CodeSpec& v);
void to_json(nlohmann::json& j, const NoiseSpec& v);
void from_json(const nlohmann::json& j, NoiseSpec& v);
void to_json(nlohmann::json& j, const SSIMConfig& v);
void from_json(const nlohmann::json& j, SSIMConfig& v);
void to_json(nlohmann::json& j, const SCConfig& v);
void from_json(const nlohmann::json& j, SCConfig& v);
void to_json(nlohmann::json& j, const AdamConfig& v);
void from_json(const nlohmann::json& j, AdamConfig& v);
void to_json(nlohmann::json& j, const ObjectiveConfig& v);
void from_json(const nlohmann::json& j, ObjectiveConfig& v);
void to_json(nlohmann::json& j, const ArchDescriptor& v);
void from_json(const nlohmann::json& j, ArchDescriptor& v);

std::string objective_kind_name(ObjectiveKind k);
ObjectiveKind objective_kind_from(const std::string& s);

// SHA-256 hex digest; used for manifest and extractor content hashes.
std::string sha256_hex(const void* data, size_t len);
std::string sha256_hex(const std::string& s);

}  // namespace scgan
