#include "scgan/serialize.hpp"

#include <openssl/evp.h>

#include <array>
#include <cstdio>

namespace scgan {

using nlohmann::json;

namespace {

template <typename E>
struct EnumName {
  E value;
  const char* name;
};

template <typename E, size_t N>
std::string enum_to(const std::array<EnumName<E>, N>& table, E v) {
  for (const auto& e : table)
    if (e.value == v) return e.name;
  throw ConfigError("unknown enum value");
}

template <typename E, size_t N>
E enum_from(const std::array<EnumName<E>, N>& table, const std::string& s,
            const char* what) {
  for (const auto& e : table)
    if (s == e.name) return e.value;
  throw ConfigError(std::string("unknown ") + what + ": '" + s + "'");
}

const std::array<EnumName<CodeKind>, 2> kCodeKind = {{
    {CodeKind::discrete, "discrete"},
    {CodeKind::continuous, "continuous"},
}};
const std::array<EnumName<NoiseDist>, 2> kNoiseDist = {{
    {NoiseDist::uniform, "uniform"},
    {NoiseDist::normal, "normal"},
}};
const std::array<EnumName<WindowKind>, 2> kWindowKind = {{
    {WindowKind::gaussian, "gaussian"},
    {WindowKind::uniform, "uniform"},
}};
const std::array<EnumName<SCVariant>, 2> kVariant = {{
    {SCVariant::original, "original"},
    {SCVariant::modified, "modified"},
}};
const std::array<EnumName<SimMeasure>, 2> kMeasure = {{
    {SimMeasure::euclidean, "euclidean"},
    {SimMeasure::ssim, "ssim"},
}};
const std::array<EnumName<TermFamily>, 3> kFamily = {{
    {TermFamily::linear, "linear"},
    {TermFamily::square, "square"},
    {TermFamily::exp, "exp"},
}};
const std::array<EnumName<PairScheme>, 1> kScheme = {{
    {PairScheme::disjoint_cross, "disjoint_cross"},
}};
const std::array<EnumName<ObjectiveKind>, 5> kObjective = {{
    {ObjectiveKind::gan, "gan"},
    {ObjectiveKind::cgan, "cgan"},
    {ObjectiveKind::infogan, "infogan"},
    {ObjectiveKind::scgan, "scgan"},
    {ObjectiveKind::modified, "modified"},
}};

}  // namespace

std::string objective_kind_name(ObjectiveKind k) { return enum_to(kObjective, k); }
ObjectiveKind objective_kind_from(const std::string& s) {
  return enum_from(kObjective, s, "objective kind");
}

void to_json(json& j, const CodeSpec& v) {
  j = json{{"kind", enum_to(kCodeKind, v.kind)},
           {"cardinality", v.cardinality},
           {"range", {v.range_lo, v.range_hi}}};
}

void from_json(const json& j, CodeSpec& v) {
  v.kind = enum_from(kCodeKind, j.at("kind").get<std::string>(), "code kind");
  v.cardinality = j.at("cardinality").get<int>();
  if (j.contains("range")) {
    v.range_lo = j.at("range").at(0).get<double>();
    v.range_hi = j.at("range").at(1).get<double>();
  }
}

void to_json(json& j, const NoiseSpec& v) {
  j = json{{"dim", v.dim}, {"distribution", enum_to(kNoiseDist, v.distribution)}};
}

void from_json(const json& j, NoiseSpec& v) {
  v.dim = j.at("dim").get<int>();
  if (j.contains("distribution"))
    v.distribution = enum_from(kNoiseDist, j.at("distribution").get<std::string>(),
                               "noise distribution");
}

void to_json(json& j, const SSIMConfig& v) {
  j = json{{"window_size", v.window_size},
           {"window", enum_to(kWindowKind, v.window)},
           {"sigma", v.sigma},
           {"k1", v.k1},
           {"k2", v.k2},
           {"dynamic_range", v.dynamic_range}};
}

void from_json(const json& j, SSIMConfig& v) {
  if (j.contains("window_size")) v.window_size = j.at("window_size").get<int>();
  if (j.contains("window"))
    v.window = enum_from(kWindowKind, j.at("window").get<std::string>(), "window");
  if (j.contains("sigma")) v.sigma = j.at("sigma").get<double>();
  if (j.contains("k1")) v.k1 = j.at("k1").get<double>();
  if (j.contains("k2")) v.k2 = j.at("k2").get<double>();
  if (j.contains("dynamic_range"))
    v.dynamic_range = j.at("dynamic_range").get<double>();
}

void to_json(json& j, const SCConfig& v) {
  j = json{{"variant", enum_to(kVariant, v.variant)},
           {"code_kind", enum_to(kCodeKind, v.code_kind)},
           {"sim_measure", enum_to(kMeasure, v.sim_measure)},
           {"term_family", enum_to(kFamily, v.term_family)},
           {"lambda", v.lambda},
           {"lambda1", v.lambda1},
           {"lambda2", v.lambda2},
           {"n1", v.n1},
           {"n2", v.n2},
           {"epsilon", v.epsilon},
           {"eq7_verbatim", v.eq7_verbatim},
           {"scheme", enum_to(kScheme, v.scheme)},
           {"ssim", v.ssim}};
}

void from_json(const json& j, SCConfig& v) {
  v.variant = enum_from(kVariant, j.at("variant").get<std::string>(), "sc variant");
  if (j.contains("code_kind"))
    v.code_kind = enum_from(kCodeKind, j.at("code_kind").get<std::string>(), "code kind");
  if (j.contains("sim_measure"))
    v.sim_measure = enum_from(kMeasure, j.at("sim_measure").get<std::string>(), "sim measure");
  if (j.contains("term_family"))
    v.term_family = enum_from(kFamily, j.at("term_family").get<std::string>(), "term family");
  if (j.contains("lambda")) v.lambda = j.at("lambda").get<double>();
  if (j.contains("lambda1")) v.lambda1 = j.at("lambda1").get<double>();
  if (j.contains("lambda2")) v.lambda2 = j.at("lambda2").get<double>();
  if (j.contains("n1")) v.n1 = j.at("n1").get<int>();
  if (j.contains("n2")) v.n2 = j.at("n2").get<int>();
  if (j.contains("epsilon")) v.epsilon = j.at("epsilon").get<double>();
  if (j.contains("eq7_verbatim")) v.eq7_verbatim = j.at("eq7_verbatim").get<bool>();
  if (j.contains("scheme"))
    v.scheme = enum_from(kScheme, j.at("scheme").get<std::string>(), "pair scheme");
  if (j.contains("ssim")) v.ssim = j.at("ssim").get<SSIMConfig>();
}

void to_json(json& j, const AdamConfig& v) {
  j = json{{"lr", v.lr}, {"beta1", v.beta1}, {"beta2", v.beta2}, {"eps", v.eps}};
}

void from_json(const json& j, AdamConfig& v) {
  if (j.contains("lr")) v.lr = j.at("lr").get<double>();
  if (j.contains("beta1")) v.beta1 = j.at("beta1").get<double>();
  if (j.contains("beta2")) v.beta2 = j.at("beta2").get<double>();
  if (j.contains("eps")) v.eps = j.at("eps").get<double>();
}

void to_json(json& j, const ObjectiveConfig& v) {
  j = json{{"kind", enum_to(kObjective, v.kind)},
           {"lambda_info", v.lambda_info},
           {"literal_minimax", v.literal_minimax}};
  if (v.sc) j["sc"] = *v.sc;
}

void from_json(const json& j, ObjectiveConfig& v) {
  v.kind = enum_from(kObjective, j.at("kind").get<std::string>(), "objective kind");
  if (j.contains("lambda_info")) v.lambda_info = j.at("lambda_info").get<double>();
  if (j.contains("literal_minimax"))
    v.literal_minimax = j.at("literal_minimax").get<bool>();
  if (j.contains("sc"))
    v.sc = j.at("sc").get<SCConfig>();
  else
    v.sc.reset();
}

void to_json(json& j, const ArchDescriptor& v) {
  j = json{{"image_size", v.image_size},
           {"image_channels", v.image_channels},
           {"noise_dim", v.noise_dim},
           {"code", v.code},
           {"base_channels", v.base_channels},
           {"dense_units", v.dense_units},
           {"batchnorm", v.batchnorm},
           {"conditional_d", v.conditional_d},
           {"q_head", v.q_head},
           {"leaky_slope", v.leaky_slope}};
}

void from_json(const json& j, ArchDescriptor& v) {
  v.image_size = j.at("image_size").get<int>();
  v.image_channels = j.at("image_channels").get<int>();
  v.noise_dim = j.at("noise_dim").get<int>();
  v.code = j.at("code").get<CodeSpec>();
  if (j.contains("base_channels")) v.base_channels = j.at("base_channels").get<int>();
  if (j.contains("dense_units")) v.dense_units = j.at("dense_units").get<int>();
  if (j.contains("batchnorm")) v.batchnorm = j.at("batchnorm").get<bool>();
  if (j.contains("conditional_d")) v.conditional_d = j.at("conditional_d").get<bool>();
  if (j.contains("q_head")) v.q_head = j.at("q_head").get<bool>();
  if (j.contains("leaky_slope")) v.leaky_slope = j.at("leaky_slope").get<double>();
}

std::string sha256_hex(const void* data, size_t len) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int dlen = 0;
  EVP_Digest(data, len, digest, &dlen, EVP_sha256(), nullptr);
  std::string out;
  out.reserve(dlen * 2);
  for (unsigned int i = 0; i < dlen; ++i) {
    char buf[3];
    std::snprintf(buf, sizeof(buf), "%02x", digest[i]);
    out += buf;
  }
  return out;
}

std::string sha256_hex(const std::string& s) { return sha256_hex(s.data(), s.size()); }

}  // namespace scgan
