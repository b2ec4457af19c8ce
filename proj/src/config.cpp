#include "blab/config.hpp"

#include "blab/errors.hpp"
#include "blab/io.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <functional>
#include <sstream>

namespace blab {
namespace {

struct Field {
  std::string section;
  std::string key;
  std::function<void(ExperimentConfig&, std::string_view)> set;
  std::function<std::string(const ExperimentConfig&)> get;

  std::string name() const { return section + "." + key; }
};

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <typename Int>
Int parse_integer(std::string_view text) {
  text = trim(text);
  Int value{};
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || end != text.data() + text.size() || text.empty())
    throw InvalidArgument("not an integer: '" + std::string(text) + "'");
  return value;
}

double parse_real(std::string_view text) { return parse_double(trim(text)); }

template <typename T, typename Parse>
std::vector<T> parse_list(std::string_view text, Parse parse) {
  std::vector<T> out;
  text = trim(text);
  if (text.empty()) return out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = text.find(',', start);
    out.push_back(parse(text.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

template <typename T, typename Format>
std::string join(const std::vector<T>& values, Format format) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ", ";
    out += format(values[i]);
  }
  return out;
}

std::string int_text(long long v) { return std::to_string(v); }

Optimizer parse_optimizer(std::string_view name) {
  name = trim(name);
  if (name == "adam") return Optimizer::adam;
  if (name == "sgd_momentum" || name == "sgd") return Optimizer::sgd_momentum;
  throw InvalidArgument("unknown optimizer '" + std::string(name) + "'");
}

// Members are addressed through small accessors so one table drives both
// parsing and serialization.
template <typename Get>
Field real_field(std::string section, std::string key, Get member) {
  return {std::move(section), std::move(key),
          [member](ExperimentConfig& c, std::string_view v) { member(c) = parse_real(v); },
          [member](const ExperimentConfig& c) { return format_double(member(c)); }};
}

template <typename Int, typename Get>
Field int_field(std::string section, std::string key, Get member) {
  return {std::move(section), std::move(key),
          [member](ExperimentConfig& c, std::string_view v) { member(c) = parse_integer<Int>(v); },
          [member](const ExperimentConfig& c) { return std::to_string(member(c)); }};
}

template <typename Get>
Field string_field(std::string section, std::string key, Get member) {
  return {std::move(section), std::move(key),
          [member](ExperimentConfig& c, std::string_view v) { member(c) = std::string(trim(v)); },
          [member](const ExperimentConfig& c) { return member(c); }};
}

template <typename Get>
Field real_list_field(std::string section, std::string key, Get member) {
  return {std::move(section), std::move(key),
          [member](ExperimentConfig& c, std::string_view v) { member(c) = parse_list<double>(v, parse_real); },
          [member](const ExperimentConfig& c) {
            return join(member(c), [](double x) { return format_double(x); });
          }};
}

template <typename Get>
Field int_list_field(std::string section, std::string key, Get member) {
  return {std::move(section), std::move(key),
          [member](ExperimentConfig& c, std::string_view v) {
            member(c) = parse_list<int>(v, [](std::string_view s) { return parse_integer<int>(s); });
          },
          [member](const ExperimentConfig& c) {
            return join(member(c), [](int x) { return int_text(x); });
          }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    using C = ExperimentConfig;
    std::vector<Field> t;
    t.push_back(int_field<int>("experiment", "iterations", [](auto& c) -> auto& { return c.iterations; }));
    t.push_back(int_field<std::uint64_t>("experiment", "seed", [](auto& c) -> auto& { return c.seed; }));
    t.push_back(real_field("experiment", "abort_fraction", [](auto& c) -> auto& { return c.abort_fraction; }));
    t.push_back(real_field("experiment", "cosine_threshold", [](auto& c) -> auto& { return c.cosine_threshold; }));
    t.push_back(string_field("experiment", "output", [](auto& c) -> auto& { return c.output; }));

    t.push_back({"dataset", "source",
                 [](C& c, std::string_view v) { c.dataset.source = parse_data_source(trim(v)); },
                 [](const C& c) { return std::string(to_string(c.dataset.source)); }});
    t.push_back(int_field<std::uint64_t>("dataset", "seed", [](auto& c) -> auto& { return c.dataset.seed; }));
    t.push_back(int_field<std::size_t>("dataset", "test_size", [](auto& c) -> auto& { return c.dataset.test_size; }));
    t.push_back(int_field<int>("dataset", "dim", [](auto& c) -> auto& { return c.dataset.dim; }));
    t.push_back(int_field<std::size_t>("dataset", "per_class", [](auto& c) -> auto& { return c.dataset.per_class; }));
    t.push_back(real_list_field("dataset", "center0", [](auto& c) -> auto& { return c.dataset.center0; }));
    t.push_back(real_list_field("dataset", "center1", [](auto& c) -> auto& { return c.dataset.center1; }));
    t.push_back(real_field("dataset", "sigma", [](auto& c) -> auto& { return c.dataset.sigma; }));
    t.push_back(string_field("dataset", "images", [](auto& c) -> auto& { return c.dataset.images; }));
    t.push_back(string_field("dataset", "labels", [](auto& c) -> auto& { return c.dataset.labels; }));
    t.push_back(int_field<int>("dataset", "class_a", [](auto& c) -> auto& { return c.dataset.class_a; }));
    t.push_back(int_field<int>("dataset", "class_b", [](auto& c) -> auto& { return c.dataset.class_b; }));
    t.push_back(int_field<std::size_t>("dataset", "subset", [](auto& c) -> auto& { return c.dataset.subset; }));
    t.push_back(string_field("dataset", "path", [](auto& c) -> auto& { return c.dataset.path; }));
    t.push_back(string_field("dataset", "test_path", [](auto& c) -> auto& { return c.dataset.test_path; }));
    t.push_back({"dataset", "layout",
                 [](C& c, std::string_view v) { c.dataset.layout = parse_layout_kind(trim(v)); },
                 [](const C& c) { return std::string(to_string(c.dataset.layout)); }});

    t.push_back(int_list_field("network", "dims", [](auto& c) -> auto& { return c.dims; }));

    t.push_back({"train", "optimizer", [](C& c, std::string_view v) { c.train.optimizer = parse_optimizer(v); },
                 [](const C& c) { return std::string(to_string(c.train.optimizer)); }});
    t.push_back(real_field("train", "learning_rate", [](auto& c) -> auto& { return c.train.learning_rate; }));
    t.push_back(real_field("train", "momentum", [](auto& c) -> auto& { return c.train.momentum; }));
    t.push_back(real_field("train", "beta1", [](auto& c) -> auto& { return c.train.adam_beta1; }));
    t.push_back(real_field("train", "beta2", [](auto& c) -> auto& { return c.train.adam_beta2; }));
    t.push_back(real_field("train", "epsilon", [](auto& c) -> auto& { return c.train.adam_epsilon; }));
    t.push_back(int_field<int>("train", "max_epochs", [](auto& c) -> auto& { return c.train.max_epochs; }));
    t.push_back(int_field<int>("train", "batch_size", [](auto& c) -> auto& { return c.train.batch_size; }));
    t.push_back(real_field("train", "accuracy_target", [](auto& c) -> auto& { return c.train.accuracy_target; }));

    t.push_back(
        real_field("projector", "boundary_tolerance", [](auto& c) -> auto& { return c.projector.boundary_tolerance; }));
    t.push_back(int_field<int>("projector", "max_newton_steps", [](auto& c) -> auto& { return c.projector.max_newton_steps; }));
    t.push_back(int_field<int>("projector", "max_refine_steps", [](auto& c) -> auto& { return c.projector.max_refine_steps; }));
    t.push_back(real_field("projector", "refine_tolerance", [](auto& c) -> auto& { return c.projector.refine_tolerance; }));
    t.push_back(real_field("projector", "max_step", [](auto& c) -> auto& { return c.projector.max_step; }));
    t.push_back(
        int_field<int>("projector", "max_bisection_steps", [](auto& c) -> auto& { return c.projector.max_bisection_steps; }));
    t.push_back(
        int_field<int>("projector", "segment_candidates", [](auto& c) -> auto& { return c.projector.segment_candidates; }));

    t.push_back({"transfer", "mode", [](C& c, std::string_view v) { c.transfer.mode = parse_transfer_mode(trim(v)); },
                 [](const C& c) { return std::string(to_string(c.transfer.mode)); }});
    t.push_back(real_field("transfer", "kappa", [](auto& c) -> auto& { return c.transfer.kappa; }));
    t.push_back(int_list_field("transfer", "target_dims", [](auto& c) -> auto& { return c.transfer.target_dims; }));
    t.push_back(
        real_field("transfer", "min_target_accuracy", [](auto& c) -> auto& { return c.transfer.min_target_accuracy; }));

    t.push_back(int_field<int>("symmetry", "trials", [](auto& c) -> auto& { return c.symmetry.trials; }));
    t.push_back(real_field("symmetry", "kappa", [](auto& c) -> auto& { return c.symmetry.kappa; }));
    t.push_back(real_field("symmetry", "cluster_cosine", [](auto& c) -> auto& { return c.symmetry.cluster_cosine; }));
    t.push_back(
        int_list_field("symmetry", "perturb_indices", [](auto& c) -> auto& { return c.symmetry.perturb_indices; }));
    t.push_back(
        real_list_field("symmetry", "perturb_shift", [](auto& c) -> auto& { return c.symmetry.perturb_shift; }));
    return t;
  }();
  return table;
}

const Field* find_field(std::string_view section, std::string_view key) {
  for (const Field& f : fields())
    if (f.section == section && f.key == key) return &f;
  return nullptr;
}

void set_field(const Field& field, ExperimentConfig& cfg, std::string_view value) {
  try {
    field.set(cfg, value);
  } catch (const Error& e) {
    throw ConfigError("config key '" + field.name() + "': " + e.what());
  }
}

}  // namespace

ExperimentConfig parse_config(std::string_view text) {
  boost::property_tree::ptree tree;
  std::istringstream stream{std::string(text)};
  try {
    boost::property_tree::read_ini(stream, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError("config syntax error at line " + std::to_string(e.line()) + ": " + e.message());
  }
  ExperimentConfig cfg;
  for (const auto& [section, entries] : tree) {
    if (entries.empty()) throw ConfigError("config key '" + section + "' lies outside any section");
    bool known_section = false;
    for (const Field& f : fields()) known_section = known_section || f.section == section;
    if (!known_section) throw ConfigError("unknown config section '" + section + "'");
    for (const auto& [key, node] : entries) {
      const Field* field = find_field(section, key);
      if (!field) throw ConfigError("unknown config key '" + section + "." + key + "'");
      set_field(*field, cfg, node.data());
    }
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const DataError&) {
    throw ConfigError("cannot read config file " + path.string());
  }
  return parse_config(text);
}

std::string serialize_config(const ExperimentConfig& cfg) {
  std::string out;
  std::string section;
  for (const Field& f : fields()) {
    if (f.section != section) {
      if (!section.empty()) out += '\n';
      section = f.section;
      out += "[" + section + "]\n";
    }
    out += f.key + " = " + f.get(cfg) + "\n";
  }
  return out;
}

void apply_override(ExperimentConfig& cfg, std::string_view key, std::string_view value) {
  if (const std::size_t dot = key.find('.'); dot != std::string_view::npos) {
    const Field* field = find_field(key.substr(0, dot), key.substr(dot + 1));
    if (!field) throw ConfigError("unknown config key '" + std::string(key) + "'");
    set_field(*field, cfg, value);
    return;
  }
  const Field* match = nullptr;
  for (const Field& f : fields()) {
    if (f.key != key) continue;
    if (match) throw ConfigError("config key '" + std::string(key) + "' is ambiguous; qualify it with a section");
    match = &f;
  }
  if (!match) throw ConfigError("unknown config key '" + std::string(key) + "'");
  set_field(*match, cfg, value);
}

std::vector<std::string> config_keys() {
  std::vector<std::string> out;
  for (const Field& f : fields()) out.push_back(f.name());
  return out;
}

}  // namespace blab
