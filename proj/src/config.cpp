#include "dpcc/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace dpcc {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

double parse_number(const std::string& s) {
  std::string t = trim(s);
  if (t == "inf" || t == "+inf" || t == "infinity")
    return std::numeric_limits<double>::infinity();
  try {
    return std::stod(t);
  } catch (const std::exception&) {
    fail(ErrorKind::kUsage, "bad numeric config value: " + s);
  }
}

}  // namespace

IniFile IniFile::parse(const std::string& text) {
  IniFile ini;
  std::istringstream ss(text);
  std::string line, section;
  while (std::getline(ss, line)) {
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[' && line.back() == ']') {
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      fail(ErrorKind::kUsage, "config line is not 'key = value': " + line);
    ini.sections_[section][trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return ini;
}

IniFile IniFile::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kUsage, "cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

bool IniFile::has(const std::string& section, const std::string& key) const {
  auto s = sections_.find(section);
  return s != sections_.end() && s->second.count(key) > 0;
}

std::string IniFile::get(const std::string& section, const std::string& key,
                         const std::string& fallback) const {
  auto s = sections_.find(section);
  if (s == sections_.end()) return fallback;
  auto k = s->second.find(key);
  return k == s->second.end() ? fallback : k->second;
}

double IniFile::get_double(const std::string& section, const std::string& key,
                           double fallback) const {
  return has(section, key) ? parse_number(get(section, key, "")) : fallback;
}

i64 IniFile::get_int(const std::string& section, const std::string& key, i64 fallback) const {
  return has(section, key) ? i64(std::llround(parse_number(get(section, key, "")))) : fallback;
}

std::vector<double> IniFile::get_list(const std::string& section, const std::string& key) const {
  std::vector<double> out;
  std::string raw = get(section, key, "");
  std::istringstream ss(raw);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!trim(item).empty()) out.push_back(parse_number(item));
  return out;
}

CodecConfig apply_codec_config(const IniFile& ini, CodecConfig base) {
  base.lod.base_layers = int(ini.get_int("lod", "T", base.lod.base_layers));
  base.lod.total_layers = int(ini.get_int("lod", "L", base.lod.total_layers));
  base.lod.neighbors = int(ini.get_int("lod", "k", base.lod.neighbors));
  if (ini.has("lod", "schedule")) {
    base.lod.schedule.clear();
    for (double v : ini.get_list("lod", "schedule")) base.lod.schedule.push_back(u32(v));
  }
  base.dald.n = int(ini.get_int("dald", "n", base.dald.n));
  const char* axes[3] = {"tx", "ty", "tz"};
  for (int a = 0; a < 3; ++a)
    if (ini.has("dald", axes[a]))
      base.dald.thresholds[std::size_t(a)] = ini.get_list("dald", axes[a]);
  base.partition.batch_size = u32(ini.get_int("partition", "N", base.partition.batch_size));
  base.partition.batches_per_block =
    u32(ini.get_int("partition", "batches_per_block", base.partition.batches_per_block));
  base.partition.seed = u64(ini.get_int("partition", "seed", i64(base.partition.seed)));
  base.n_el = int(ini.get_int("model", "n_el", base.n_el));
  base.n_ea = int(ini.get_int("model", "n_ea", base.n_ea));
  base.n_er = int(ini.get_int("model", "n_er", base.n_er));
  base.layers = int(ini.get_int("model", "layers", base.layers));
  base.heads = int(ini.get_int("model", "heads", base.heads));
  return base;
}

TrainConfig apply_train_config(const IniFile& ini, TrainConfig base) {
  base.lr = ini.get_double("train", "lr", base.lr);
  base.epochs = int(ini.get_int("train", "epochs", base.epochs));
  base.batch_count = int(ini.get_int("train", "batch_count", base.batch_count));
  base.seed = u64(ini.get_int("train", "seed", i64(base.seed)));
  return base;
}

}  // namespace dpcc
