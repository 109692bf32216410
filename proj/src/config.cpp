#include "synaug/config.hpp"

#include <cerrno>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string_view>

namespace synaug {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) {
    return {};
  }
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> items;
  if (trim(value).empty()) {
    return items;
  }
  std::size_t start = 0;
  while (true) {
    const auto comma = value.find(',', start);
    items.push_back(trim(std::string_view(value).substr(
        start, comma == std::string::npos ? std::string::npos : comma - start)));
    if (comma == std::string::npos) {
      break;
    }
    start = comma + 1;
  }
  return items;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Location-aware conversion failures.
struct Where {
  int line;
  std::string key;

  [[noreturn]] void fail(const std::string& what) const {
    throw ValidationError("config line " + std::to_string(line) + ": key '" + key + "': " +
                          what);
  }
};

template <typename T> T parse_integer(const std::string& text, const Where& where) {
  T value{};
  const char* first = text.data();
  const char* last = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (text.empty() || ec != std::errc() || ptr != last) {
    where.fail("expected an integer, got '" + text + "'");
  }
  return value;
}

double parse_double(const std::string& text, const Where& where) {
  double value = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (text.empty() || ec != std::errc() || ptr != last) {
    where.fail("expected a number, got '" + text + "'");
  }
  return value;
}

bool parse_bool(const std::string& text, const Where& where) {
  if (text == "true") {
    return true;
  }
  if (text == "false") {
    return false;
  }
  where.fail("expected true or false, got '" + text + "'");
}

struct Field {
  std::string section; // empty for top-level keys
  std::string key;
  std::function<void(RootConfig&, const std::string&, const Where&)> apply;
  std::function<std::string(const RootConfig&)> print;
};

template <typename T>
Field integer_field(std::string section, std::string key, T ExperimentSpec::*member) {
  return {std::move(section), std::move(key),
          [member](RootConfig& c, const std::string& v, const Where& w) {
            c.spec.*member = parse_integer<T>(v, w);
          },
          [member](const RootConfig& c) { return std::to_string(c.spec.*member); }};
}

template <typename Owner, typename T>
Field nested_integer(std::string section, std::string key, Owner ExperimentSpec::*owner,
                     T Owner::*member) {
  return {std::move(section), std::move(key),
          [owner, member](RootConfig& c, const std::string& v, const Where& w) {
            (c.spec.*owner).*member = parse_integer<T>(v, w);
          },
          [owner, member](const RootConfig& c) {
            return std::to_string((c.spec.*owner).*member);
          }};
}

template <typename Owner>
Field nested_double(std::string section, std::string key, Owner ExperimentSpec::*owner,
                    double Owner::*member) {
  return {std::move(section), std::move(key),
          [owner, member](RootConfig& c, const std::string& v, const Where& w) {
            (c.spec.*owner).*member = parse_double(v, w);
          },
          [owner, member](const RootConfig& c) {
            return format_double((c.spec.*owner).*member);
          }};
}

Field bool_field(std::string section, std::string key, bool ExperimentSpec::*member) {
  return {std::move(section), std::move(key),
          [member](RootConfig& c, const std::string& v, const Where& w) {
            c.spec.*member = parse_bool(v, w);
          },
          [member](const RootConfig& c) { return std::string(c.spec.*member ? "true" : "false"); }};
}

Field double_list(std::string section, std::string key,
                  std::vector<double> ExperimentSpec::*member) {
  return {std::move(section), std::move(key),
          [member](RootConfig& c, const std::string& v, const Where& w) {
            std::vector<double> out;
            for (const auto& item : split_list(v)) {
              out.push_back(parse_double(item, w));
            }
            c.spec.*member = std::move(out);
          },
          [member](const RootConfig& c) {
            std::string s;
            for (double x : c.spec.*member) {
              s += s.empty() ? "" : ", ";
              s += format_double(x);
            }
            return s;
          }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    using S = ExperimentSpec;
    std::vector<Field> t;
    t.push_back({"", "seed",
                 [](RootConfig& c, const std::string& v, const Where& w) {
                   c.spec.seed = parse_integer<std::uint64_t>(v, w);
                 },
                 [](const RootConfig& c) { return std::to_string(c.spec.seed); }});
    t.push_back({"", "output_dir",
                 [](RootConfig& c, const std::string& v, const Where&) { c.output_dir = v; },
                 [](const RootConfig& c) { return c.output_dir; }});

    t.push_back({"experiment", "kind",
                 [](RootConfig& c, const std::string& v, const Where& w) {
                   try {
                     c.spec.kind = experiment_kind_from_string(v);
                   } catch (const ValidationError& e) {
                     w.fail(e.what());
                   }
                 },
                 [](const RootConfig& c) { return std::string(to_string(c.spec.kind)); }});
    t.push_back(integer_field("experiment", "replicates", &S::replicates));
    t.push_back(double_list("experiment", "sweep", &S::sweep));
    t.push_back(double_list("experiment", "imbalance_factors", &S::imbalance_factors));
    t.push_back(bool_field("experiment", "resampling", &S::resampling));
    t.push_back(bool_field("experiment", "keep_excess", &S::keep_excess));
    t.push_back(integer_field("experiment", "target", &S::target));
    t.push_back(nested_integer("experiment", "probe_epochs", &S::probe, &ProbeConfig::epochs));
    t.push_back(nested_double("experiment", "probe_lr", &S::probe, &ProbeConfig::learning_rate));
    t.push_back(nested_double("experiment", "probe_train_fraction", &S::probe,
                              &ProbeConfig::train_fraction));

    t.push_back(nested_integer("world", "dim", &S::world, &WorldParams::dim));
    t.push_back(nested_integer("world", "classes", &S::world, &WorldParams::classes));
    t.push_back(nested_double("world", "separation", &S::world, &WorldParams::separation));
    t.push_back(nested_integer("world", "n_max", &S::world, &WorldParams::n_max));
    t.push_back(nested_double("world", "imbalance_factor", &S::world,
                              &WorldParams::imbalance_factor));
    t.push_back(nested_integer("world", "test_per_class", &S::world,
                               &WorldParams::test_per_class));
    t.push_back(nested_double("world", "spurious_p", &S::world, &WorldParams::spurious_p));
    t.push_back(nested_integer("world", "spurious_per_class", &S::world,
                               &WorldParams::spurious_per_class));
    t.push_back(nested_double("world", "core_strength", &S::world, &WorldParams::core_strength));
    t.push_back(nested_double("world", "background_strength", &S::world,
                              &WorldParams::background_strength));
    t.push_back({"world", "fairness_cells",
                 [](RootConfig& c, const std::string& v, const Where& w) {
                   std::vector<std::array<long, 2>> cells;
                   for (const auto& item : split_list(v)) {
                     const auto colon = item.find(':');
                     if (colon == std::string::npos) {
                       w.fail("expected n0:n1 pairs, got '" + item + "'");
                     }
                     cells.push_back({parse_integer<long>(trim(item.substr(0, colon)), w),
                                      parse_integer<long>(trim(item.substr(colon + 1)), w)});
                   }
                   c.spec.world.fairness_cells = std::move(cells);
                 },
                 [](const RootConfig& c) {
                   std::string s;
                   for (const auto& cell : c.spec.world.fairness_cells) {
                     s += s.empty() ? "" : ", ";
                     s += std::to_string(cell[0]) + ":" + std::to_string(cell[1]);
                   }
                   return s;
                 }});
    t.push_back({"world", "class_strength",
                 [](RootConfig& c, const std::string& v, const Where& w) {
                   c.spec.world.fairness_geometry.class_strength = parse_double(v, w);
                 },
                 [](const RootConfig& c) {
                   return format_double(c.spec.world.fairness_geometry.class_strength);
                 }});
    t.push_back({"world", "group_strength",
                 [](RootConfig& c, const std::string& v, const Where& w) {
                   c.spec.world.fairness_geometry.group_strength = parse_double(v, w);
                 },
                 [](const RootConfig& c) {
                   return format_double(c.spec.world.fairness_geometry.group_strength);
                 }});
    t.push_back({"world", "direction_spread",
                 [](RootConfig& c, const std::string& v, const Where& w) {
                   c.spec.world.fairness_geometry.direction_spread = parse_double(v, w);
                 },
                 [](const RootConfig& c) {
                   return format_double(c.spec.world.fairness_geometry.direction_spread);
                 }});
    t.push_back(nested_double("world", "toy_sigma", &S::world, &WorldParams::toy_sigma));
    t.push_back(nested_integer("world", "toy_major", &S::world, &WorldParams::toy_major));
    t.push_back(nested_integer("world", "toy_minor", &S::world, &WorldParams::toy_minor));
    t.push_back(nested_integer("world", "test_per_cell", &S::world, &WorldParams::test_per_cell));

    t.push_back(nested_double("synth", "gap", &S::synth, &SynthParams::gap));
    t.push_back(nested_double("synth", "quality", &S::synth, &SynthParams::quality));
    t.push_back(nested_integer("synth", "modes", &S::synth, &SynthParams::modes));
    t.push_back(nested_double("synth", "sensitivity", &S::synth, &SynthParams::sensitivity));
    t.push_back(nested_double("synth", "inflation", &S::synth, &SynthParams::inflation));
    t.push_back(nested_double("synth", "mode_offset", &S::synth, &SynthParams::mode_offset));

    t.push_back({"train", "hidden",
                 [](RootConfig& c, const std::string& v, const Where& w) {
                   std::vector<std::size_t> sizes;
                   for (const auto& item : split_list(v)) {
                     sizes.push_back(parse_integer<std::size_t>(item, w));
                   }
                   c.spec.hidden = std::move(sizes);
                 },
                 [](const RootConfig& c) {
                   std::string s;
                   for (std::size_t h : c.spec.hidden) {
                     s += s.empty() ? "" : ", ";
                     s += std::to_string(h);
                   }
                   return s;
                 }});
    t.push_back(nested_integer("train", "epochs", &S::train, &TrainConfig::epochs));
    t.push_back(nested_integer("train", "batch_size", &S::train, &TrainConfig::batch_size));
    t.push_back(nested_double("train", "learning_rate", &S::train, &TrainConfig::learning_rate));
    t.push_back(nested_double("train", "momentum", &S::train, &TrainConfig::momentum));
    t.push_back(nested_double("train", "weight_decay", &S::train, &TrainConfig::weight_decay));
    t.push_back(nested_double("train", "mixup_alpha", &S::train, &TrainConfig::mixup_alpha));
    t.push_back({"train", "sampler",
                 [](RootConfig& c, const std::string& v, const Where& w) {
                   try {
                     c.spec.train.sampler = sampler_from_string(v);
                   } catch (const ValidationError& e) {
                     w.fail(e.what());
                   }
                 },
                 [](const RootConfig& c) { return std::string(to_string(c.spec.train.sampler)); }});
    t.push_back(nested_integer("train", "head_epochs", &S::head, &HeadParams::epochs));
    t.push_back(nested_double("train", "head_lr_scale", &S::head, &HeadParams::lr_scale));
    t.push_back(nested_double("train", "head_momentum", &S::head, &HeadParams::momentum));
    t.push_back(nested_integer("train", "head_batch_size", &S::head, &HeadParams::batch_size));
    return t;
  }();
  return table;
}

const std::vector<std::string> kSections{"experiment", "world", "synth", "train"};

std::string qualified(const Field& f) {
  return f.section.empty() ? f.key : f.section + "." + f.key;
}

/// Maps a validation message back to the line of the key it names.
std::optional<int> line_for_message(const std::string& message,
                                    const std::map<std::string, int>& key_lines) {
  std::optional<int> best;
  std::size_t best_len = 0;
  for (const auto& [name, line] : key_lines) {
    const auto dot = name.find('.');
    const std::string bare = dot == std::string::npos ? name : name.substr(dot + 1);
    if (bare.size() > best_len && message.find(bare) != std::string::npos) {
      best = line;
      best_len = bare.size();
    }
  }
  return best;
}

std::string serialize_fields(const RootConfig& config, bool include_output_dir) {
  std::ostringstream out;
  std::string section;
  for (const auto& f : fields()) {
    if (f.key == "output_dir" && !include_output_dir) {
      continue;
    }
    if (f.section != section) {
      section = f.section;
      out << "\n[" << section << "]\n";
    }
    out << f.key << " = " << f.print(config) << '\n';
  }
  return out.str();
}

} // namespace

RootConfig parse_config(const std::string& text) {
  struct Entry {
    const Field* field;
    std::string value;
    int line;
  };
  std::vector<Entry> entries;
  std::map<std::string, int> key_lines;
  std::map<std::string, int> section_lines;
  std::string section;

  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto comment = raw.find_first_of("#;");
    const std::string line = trim(comment == std::string::npos ? raw : raw.substr(0, comment));
    if (line.empty()) {
      continue;
    }
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ValidationError("config line " + std::to_string(line_no) +
                              ": malformed section header '" + line + "'");
      }
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      bool known = false;
      for (const auto& s : kSections) {
        known = known || s == section;
      }
      if (!known) {
        throw ValidationError("config line " + std::to_string(line_no) + ": unknown section [" +
                              section + "]");
      }
      if (section_lines.count(section)) {
        throw ValidationError("config line " + std::to_string(line_no) + ": section [" +
                              section + "] repeated");
      }
      section_lines[section] = line_no;
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ValidationError("config line " + std::to_string(line_no) +
                            ": expected 'key = value', got '" + line + "'");
    }
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    const Field* match = nullptr;
    for (const auto& f : fields()) {
      if (f.section == section && f.key == key) {
        match = &f;
      }
    }
    if (match == nullptr) {
      throw ValidationError("config line " + std::to_string(line_no) + ": unknown key '" + key +
                            "'" + (section.empty() ? "" : " in section [" + section + "]"));
    }
    if (key_lines.count(qualified(*match))) {
      throw ValidationError("config line " + std::to_string(line_no) + ": key '" + key +
                            "' repeated");
    }
    key_lines[qualified(*match)] = line_no;
    entries.push_back({match, value, line_no});
  }

  if (!section_lines.count("experiment")) {
    throw ValidationError("config line " + std::to_string(line_no) +
                          ": missing required section [experiment]");
  }
  const Entry* kind_entry = nullptr;
  for (const auto& e : entries) {
    if (e.field->section == "experiment" && e.field->key == "kind") {
      kind_entry = &e;
    }
  }
  if (kind_entry == nullptr) {
    throw ValidationError("config line " + std::to_string(section_lines["experiment"]) +
                          ": section [experiment] must set 'kind'");
  }

  RootConfig config;
  kind_entry->field->apply(config, kind_entry->value, {kind_entry->line, "kind"});
  config.spec = default_spec(config.spec.kind);
  for (const auto& e : entries) {
    e.field->apply(config, e.value, {e.line, e.field->key});
  }
  for (const auto& f : fields()) {
    if (!key_lines.count(qualified(f))) {
      config.defaults_applied.push_back(qualified(f) + " = " + f.print(config));
    }
  }

  try {
    validate(config.spec);
  } catch (const ValidationError& e) {
    const std::string message = e.what();
    const auto line = line_for_message(message, key_lines);
    if (line) {
      throw ValidationError("config line " + std::to_string(*line) + ": " + message);
    }
    throw;
  }
  return config;
}

RootConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ValidationError("cannot open config file '" + path.string() + "'");
  }
  std::ostringstream text;
  text << in.rdbuf();
  try {
    return parse_config(text.str());
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

std::string serialize(const RootConfig& config) {
  return serialize_fields(config, true);
}

std::string serialize(const ExperimentSpec& spec) {
  RootConfig config;
  config.spec = spec;
  return serialize_fields(config, false);
}

} // namespace synaug
