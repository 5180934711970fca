#pragma once

#include <map>
#include <string>

#include "dpcc/entropy.hpp"
#include "dpcc/pipeline.hpp"

namespace dpcc {

/// Minimal "[section] key = value" text config. '#' starts a comment.
class IniFile {
public:
  static IniFile parse(const std::string& text);
  static IniFile parse_file(const std::string& path);

  bool has(const std::string& section, const std::string& key) const;
  std::string get(const std::string& section, const std::string& key,
                  const std::string& fallback) const;
  double get_double(const std::string& section, const std::string& key, double fallback) const;
  i64 get_int(const std::string& section, const std::string& key, i64 fallback) const;
  std::vector<double> get_list(const std::string& section, const std::string& key) const;

private:
  std::map<std::string, std::map<std::string, std::string>> sections_;
};

/// Overlay config-file values onto a base codec config. Sections and keys
/// mirror the reference parameter table:
///   [lod] T L k schedule   [dald] n tx ty tz   [partition] N batches_per_block seed
///   [model] n_el n_ea n_er layers heads
CodecConfig apply_codec_config(const IniFile& ini, CodecConfig base);

/// [train] lr epochs batch_count seed
TrainConfig apply_train_config(const IniFile& ini, TrainConfig base);

}  // namespace dpcc
