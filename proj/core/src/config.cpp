#include "fm/config.hpp"

#include <openssl/evp.h>

#include <array>
#include <fstream>
#include <functional>
#include <memory>
#include <stdexcept>
#include <set>
#include <sstream>

#include "fm/error.hpp"
#include "fm/text.hpp"

namespace fm::config {
namespace {

using sim::ScenarioConfig;

struct Field {
  std::string key;  // section.name
  std::function<std::string(const ScenarioConfig&)> get;
  std::function<void(ScenarioConfig&, std::string_view)> set;
};

template <class T>
Field number(std::string key, T ScenarioConfig::*member) {
  return {std::move(key),
          [member](const ScenarioConfig& c) {
            if constexpr (std::is_floating_point_v<T>) return text::format_shortest(c.*member);
            else return std::to_string(c.*member);
          },
          [member](ScenarioConfig& c, std::string_view v) {
            if constexpr (std::is_floating_point_v<T>) c.*member = text::parse_double(v);
            else c.*member = static_cast<T>(text::parse_u64(v));
          }};
}

template <class S, class T>
Field nested(std::string key, S ScenarioConfig::*outer, T S::*member) {
  return {std::move(key),
          [outer, member](const ScenarioConfig& c) {
            if constexpr (std::is_floating_point_v<T>) return text::format_shortest(c.*outer.*member);
            else return std::to_string(c.*outer.*member);
          },
          [outer, member](ScenarioConfig& c, std::string_view v) {
            if constexpr (std::is_floating_point_v<T>) c.*outer.*member = text::parse_double(v);
            else c.*outer.*member = static_cast<T>(text::parse_u64(v));
          }};
}

template <class E, std::size_t K>
Field choice(std::string key, std::function<E&(ScenarioConfig&)> ref,
             std::array<std::pair<std::string_view, E>, K> names) {
  return {std::move(key),
          [ref, names](const ScenarioConfig& c) {
            const E value = ref(const_cast<ScenarioConfig&>(c));
            for (const auto& [name, e] : names)
              if (e == value) return std::string(name);
            return std::string("?");
          },
          [ref, names](ScenarioConfig& c, std::string_view v) {
            const std::string_view t = text::trim(v);
            for (const auto& [name, e] : names)
              if (name == t) {
                ref(c) = e;
                return;
              }
            std::string allowed;
            for (const auto& [name, e] : names) allowed += (allowed.empty() ? "" : ", ") + std::string(name);
            throw std::invalid_argument("expected one of {" + allowed + "}, got '" + std::string(t) + "'");
          }};
}

void add_ppo(std::vector<Field>& f, const std::string& section, rl::PpoConfig ScenarioConfig::*ppo) {
  using P = rl::PpoConfig;
  f.push_back(nested(section + ".learning_rate", ppo, &P::learning_rate));
  f.push_back(nested(section + ".clip_param", ppo, &P::clip_param));
  f.push_back(nested(section + ".vf_clip_param", ppo, &P::vf_clip_param));
  f.push_back(nested(section + ".kl_target", ppo, &P::kl_target));
  f.push_back(nested(section + ".initial_kl_coeff", ppo, &P::initial_kl_coeff));
  f.push_back(nested(section + ".gamma", ppo, &P::gamma));
  f.push_back(nested(section + ".gae_lambda", ppo, &P::gae_lambda));
  f.push_back(nested(section + ".vf_loss_coeff", ppo, &P::vf_loss_coeff));
  f.push_back(nested(section + ".entropy_coeff", ppo, &P::entropy_coeff));
  f.push_back(nested(section + ".train_batch_size", ppo, &P::train_batch_size));
  f.push_back(nested(section + ".minibatch_size", ppo, &P::minibatch_size));
  f.push_back(nested(section + ".sgd_iterations", ppo, &P::sgd_iterations));
  f.push_back(nested(section + ".initial_log_std", ppo, &P::initial_log_std));
  f.push_back(nested(section + ".hidden_units", ppo, &P::hidden_units));
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    using W = objectives::ObjectiveWeights;
    using O = objectives::ObfuscationSpec;
    using FK = objectives::FairnessKind;
    using OK = objectives::ObfuscationKind;
    using sim::PriceReference, sim::PricingMode;
    std::vector<Field> f;
    f.push_back(number("scenario.harvesters", &ScenarioConfig::harvesters));
    f.push_back(number("scenario.resources", &ScenarioConfig::resources));
    f.push_back(number("scenario.buyers", &ScenarioConfig::buyers));
    f.push_back(number("scenario.scarcity", &ScenarioConfig::scarcity));
    f.push_back(number("scenario.growth_rate", &ScenarioConfig::growth_rate));
    f.push_back(number("scenario.max_effort", &ScenarioConfig::max_effort));
    f.push_back(number("scenario.max_steps", &ScenarioConfig::max_steps));
    f.push_back(number("scenario.depletion_threshold", &ScenarioConfig::depletion_threshold));
    f.push_back(number("scenario.specialist_skill", &ScenarioConfig::specialist_skill));
    f.push_back(number("scenario.generalist_skill", &ScenarioConfig::generalist_skill));
    f.push_back(number("scenario.harvesting_cost", &ScenarioConfig::harvesting_cost));

    f.push_back(choice<PricingMode, 3>(
        "pricing.mode", [](ScenarioConfig& c) -> PricingMode& { return c.pricing; },
        {{{"me", PricingMode::market_equilibrium}, {"policymaker", PricingMode::policymaker}, {"fixed", PricingMode::fixed}}}));
    f.push_back({"pricing.fixed_prices",
                 [](const ScenarioConfig& c) {
                   std::string s;
                   for (double p : c.fixed_prices) s += (s.empty() ? "" : ",") + text::format_shortest(p);
                   return s;
                 },
                 [](ScenarioConfig& c, std::string_view v) {
                   c.fixed_prices.clear();
                   if (text::trim(v).empty()) return;
                   for (auto item : text::split(v, ',')) c.fixed_prices.push_back(text::parse_double(item));
                 }});
    f.push_back(number("pricing.max_price", &ScenarioConfig::max_price));
    f.push_back(choice<PriceReference, 2>(
        "pricing.reference", [](ScenarioConfig& c) -> PriceReference& { return c.price_reference; },
        {{{"equilibrium", PriceReference::equilibrium}, {"previous_price", PriceReference::previous_price}}}));
    f.push_back({"pricing.track_equilibrium",
                 [](const ScenarioConfig& c) { return std::string(c.track_equilibrium ? "true" : "false"); },
                 [](ScenarioConfig& c, std::string_view v) { c.track_equilibrium = text::parse_bool(v); }});

    f.push_back(nested("objective.w_harvesters", &ScenarioConfig::weights, &W::harvesters));
    f.push_back(nested("objective.w_buyers", &ScenarioConfig::weights, &W::buyers));
    f.push_back(nested("objective.w_sustainability", &ScenarioConfig::weights, &W::sustainability));
    f.push_back(nested("objective.w_fairness", &ScenarioConfig::weights, &W::fairness));
    f.push_back(nested("objective.w_intervention", &ScenarioConfig::weights, &W::intervention));
    f.push_back(choice<FK, 3>(
        "objective.fairness", [](ScenarioConfig& c) -> FK& { return c.fairness.kind; },
        {{{"jain", FK::jain}, {"gini", FK::gini}, {"atkinson", FK::atkinson}}}));
    f.push_back(choice<OK, 3>(
        "objective.obfuscation", [](ScenarioConfig& c) -> OK& { return c.obfuscation.kind; },
        {{{"none", OK::identity}, {"bins", OK::bins}, {"noise", OK::uniform_noise}}}));
    f.push_back({"objective.bins", [](const ScenarioConfig& c) { return std::to_string(c.obfuscation.bins); },
                 [](ScenarioConfig& c, std::string_view v) {
                   c.obfuscation.bins = static_cast<int>(text::parse_u64(v));
                 }});
    f.push_back(nested("objective.noise", &ScenarioConfig::obfuscation, &O::noise_magnitude));

    f.push_back(number("run.episodes", &ScenarioConfig::episodes));
    f.push_back(number("run.trials", &ScenarioConfig::trials));
    f.push_back(number("run.summary_window", &ScenarioConfig::summary_window));
    f.push_back(number("run.seed", &ScenarioConfig::seed));
    f.push_back(number("run.step_log_every", &ScenarioConfig::step_log_every));

    add_ppo(f, "harvester_ppo", &ScenarioConfig::harvester_ppo);
    add_ppo(f, "policymaker_ppo", &ScenarioConfig::policymaker_ppo);

    f.push_back(nested("solver.tolerance", &ScenarioConfig::solver, &market::SolverOptions::tolerance));
    f.push_back(nested("solver.max_iterations", &ScenarioConfig::solver, &market::SolverOptions::max_iterations));
    return f;
  }();
  return table;
}

const Field* find(std::string_view key) {
  for (const auto& f : fields())
    if (f.key == key) return &f;
  return nullptr;
}

}  // namespace

KeyValues parse(std::string_view content) {
  KeyValues out;
  std::string section;
  std::size_t line_no = 0;
  for (std::string_view raw : text::split(content, '\n')) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string_view line = text::trim(hash == std::string_view::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const auto where = "line " + std::to_string(line_no) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3) throw ConfigError(where + "malformed section header");
      section = std::string(text::trim(line.substr(1, line.size() - 2)));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(where + "expected 'key = value'");
    const std::string_view key = text::trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError(where + "empty key");
    const std::string full = section.empty() ? std::string(key) : section + "." + std::string(key);
    if (!out.emplace(full, std::string(text::trim(line.substr(eq + 1)))).second)
      throw ConfigError(where + "duplicate key '" + full + "'");
  }
  return out;
}

KeyValues read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse(buf.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

sim::ScenarioConfig preset(std::string_view name) {
  sim::ScenarioConfig c;
  if (name == "plentiful") c.scarcity = 0.8;
  else if (name == "scarce") c.scarcity = 0.45;
  else throw ConfigError("unknown scenario '" + std::string(name) + "' (expected plentiful or scarce)");
  return c;
}

void apply(const KeyValues& values, sim::ScenarioConfig& config) {
  for (const auto& [key, value] : values) {
    const Field* f = find(key);
    if (!f) throw ConfigError("unknown config key '" + key + "'");
    try {
      f->set(config, value);
    } catch (const std::invalid_argument& e) {
      throw ConfigError("config key '" + key + "': " + e.what());
    }
  }
  sim::validate(config);
}

KeyValues to_key_values(const sim::ScenarioConfig& config) {
  KeyValues out;
  for (const auto& f : fields()) out[f.key] = f.get(config);
  return out;
}

std::string canonical_text(const sim::ScenarioConfig& config) {
  std::string s;
  for (const auto& [key, value] : to_key_values(config)) s += key + "=" + value + "\n";
  return s;
}

std::string to_ini(const sim::ScenarioConfig& config) {
  std::string s, current;
  for (const auto& f : fields()) {
    const auto dot = f.key.find('.');
    const std::string section = f.key.substr(0, dot);
    if (section != current) {
      s += (current.empty() ? "[" : "\n[") + section + "]\n";
      current = section;
    }
    s += f.key.substr(dot + 1) + " = " + f.get(config) + "\n";
  }
  return s;
}

std::string git_blob_hash(std::string_view content) {
  const std::string header = "blob " + std::to_string(content.size()) + '\0';
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha1(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), header.data(), header.size()) != 1 ||
      EVP_DigestUpdate(ctx.get(), content.data(), content.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest, &length) != 1)
    throw std::runtime_error("SHA-1 digest failed");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < length; ++i) {
    const unsigned char b = digest[i];
    out += hex[b >> 4];
    out += hex[b & 15];
  }
  return out;
}

std::string config_hash(const sim::ScenarioConfig& config) { return git_blob_hash(canonical_text(config)); }

}  // namespace fm::config
