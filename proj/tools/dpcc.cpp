// Command-line surface for the codec: encode, decode, train, analyze, report.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "dpcc/config.hpp"
#include "dpcc/metrics.hpp"

namespace fs = std::filesystem;
using namespace dpcc;

namespace {

int thread_count(int flag_value) {
  if (flag_value > 0) return flag_value;
  if (const char* env = std::getenv("DPCC_THREADS")) {
    int n = std::atoi(env);
    if (n > 0) return n;
  }
  return hardware_threads();
}

std::vector<u8> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::kUsage, "cannot open " + path);
  return std::vector<u8>((std::istreambuf_iterator<char>(in)),
                         std::istreambuf_iterator<char>());
}

void write_file(const std::string& path, const std::vector<u8>& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::kUsage, "cannot open " + path + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
}

CodecConfig resolve_config(const std::string& preset, const std::string& config_path) {
  CodecConfig base = CodecConfig::object_default();
  if (preset == "lidar") base = CodecConfig::lidar_default();
  else if (preset == "desk") base = CodecConfig::desk_default();
  else if (preset != "object") fail(ErrorKind::kUsage, "unknown preset " + preset);
  if (!config_path.empty())
    base = apply_codec_config(IniFile::parse_file(config_path), base);
  return base;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LoD-based lossless point cloud attribute codec"};
  app.require_subcommand(1);

  std::string input, output, model_path, config_path, geometry_path, checkpoint_path;
  std::string corpus_dir, preset = "object", ratios_csv;
  bool baseline = false, embed_geometry = false, as_json = false, resume = false;
  int threads = 0, geometry_bits = 0;
  u64 seed = 1;

  auto* enc = app.add_subcommand("encode", "compress a PLY into a bitstream");
  enc->add_option("--input", input)->required();
  enc->add_option("--output", output)->required();
  enc->add_option("--model", model_path);
  enc->add_flag("--baseline", baseline, "use the order-0 adaptive model instead of a learned one");
  enc->add_option("--config", config_path);
  enc->add_option("--preset", preset, "object|lidar|desk");
  enc->add_flag("--embed-geometry", embed_geometry);
  enc->add_option("--geometry-bits", geometry_bits);
  enc->add_option("--threads", threads);
  enc->add_flag("--json", as_json);

  auto* dec = app.add_subcommand("decode", "reconstruct the PLY from a bitstream");
  dec->add_option("--input", input)->required();
  dec->add_option("--output", output)->required();
  dec->add_option("--geometry", geometry_path, "side geometry PLY when not embedded");
  dec->add_option("--model", model_path);
  dec->add_option("--threads", threads);

  auto* trn = app.add_subcommand("train", "train the entropy model on a PLY corpus");
  trn->add_option("--corpus", corpus_dir)->required();
  trn->add_option("--out", output)->required();
  trn->add_option("--config", config_path);
  trn->add_option("--preset", preset, "object|lidar|desk");
  trn->add_option("--checkpoint", checkpoint_path);
  trn->add_flag("--resume", resume, "continue from --checkpoint");
  trn->add_option("--threads", threads);
  trn->add_option("--seed", seed);

  auto* ana = app.add_subcommand("analyze", "density metrics for a PLY");
  ana->add_option("--input", input)->required();
  ana->add_option("--ratios", ratios_csv, "comma-separated sampling ratios for the density curve");
  ana->add_option("--seed", seed);
  ana->add_flag("--json", as_json);

  auto* rep = app.add_subcommand("report", "rate report for an existing bitstream");
  rep->add_option("--input", input)->required();
  rep->add_flag("--json", as_json);

  CLI11_PARSE(app, argc, argv);

  try {
    if (enc->parsed()) {
      CodecConfig cfg = resolve_config(preset, config_path);
      std::optional<int> bits;
      if (geometry_bits > 0) bits = geometry_bits;
      PointCloud cloud = load_ply_file(input, bits);
      std::optional<EntropyModel> model;
      EncodeOptions opts;
      opts.baseline = baseline;
      opts.embed_geometry = embed_geometry;
      opts.threads = thread_count(threads);
      if (!baseline) {
        if (model_path.empty())
          fail(ErrorKind::kUsage, "encode needs --model <file> or --baseline");
        model = EntropyModel::load(model_path);
        opts.model = &*model;
      }
      std::cerr << "encoding " << cloud.size() << " points, "
                << (baseline ? "baseline" : "learned") << " entropy path, threads="
                << opts.threads << "\n";
      EncodeResult result = encode(cloud, cfg, opts);
      write_file(output, result.bytes);
      std::cout << (as_json ? result.report.to_json() : result.report.to_text());
      return 0;
    }

    if (dec->parsed()) {
      DecodeOptions opts;
      opts.threads = thread_count(threads);
      std::optional<EntropyModel> model;
      if (!model_path.empty()) {
        model = EntropyModel::load(model_path);
        opts.model = &*model;
      }
      if (!geometry_path.empty()) opts.geometry = load_ply_file(geometry_path);
      PointCloud cloud = decode(read_file(input), opts);
      save_ply_file(cloud, output);
      std::cerr << "decoded " << cloud.size() << " points\n";
      return 0;
    }

    if (trn->parsed()) {
      CodecConfig cfg = resolve_config(preset, config_path);
      TrainConfig tc;
      tc.seed = seed;
      if (!config_path.empty())
        tc = apply_train_config(IniFile::parse_file(config_path), tc);
      tc.verbose = true;
      tc.checkpoint_path = checkpoint_path;
      nn::set_matmul_threads(thread_count(threads));

      std::vector<std::string> files;
      for (const auto& e : fs::directory_iterator(corpus_dir))
        if (e.path().extension() == ".ply") files.push_back(e.path().string());
      std::sort(files.begin(), files.end());
      if (files.empty()) fail(ErrorKind::kUsage, "no .ply files in " + corpus_dir);

      std::vector<TrainBatch> dataset;
      std::optional<AttributeMode> mode;
      for (const auto& f : files) {
        PointCloud cloud = load_ply_file(f);
        if (mode && cloud.attributes.mode != *mode)
          fail(ErrorKind::kUsage, "corpus mixes single-channel and RGB clouds");
        mode = cloud.attributes.mode;
        auto batches = prepare_training_batches(cloud, cfg);
        std::cerr << "corpus " << f << ": " << cloud.size() << " points, "
                  << batches.size() << " batches\n";
        for (auto& b : batches) dataset.push_back(std::move(b));
      }

      std::optional<EntropyModel> model;
      if (resume) {
        if (checkpoint_path.empty()) fail(ErrorKind::kUsage, "--resume needs --checkpoint");
        int done = 0;
        model = EntropyModel::load_checkpoint(checkpoint_path, &done);
        std::cerr << "resuming from epoch " << done << "\n";
      } else {
        model = EntropyModel(cfg.model_config(*mode), tc.seed);
      }
      std::cerr << "training on " << dataset.size() << " batches, seed " << tc.seed << "\n";
      TrainStats stats = model->train(dataset, tc);
      for (std::size_t e = 0; e < stats.epoch_loss.size(); ++e)
        std::cout << "epoch " << (e + 1) << " loss " << stats.epoch_loss[e] << " bits/point\n";
      model->save(output);
      std::cerr << "model written to " << output << "\n";
      return 0;
    }

    if (ana->parsed()) {
      PointCloud cloud = load_ply_file(input);
      if (cloud.size() == 0) fail(ErrorKind::kUsage, "empty cloud");
      double nn = nn_density(cloud.positions);
      if (!ratios_csv.empty()) {
        std::vector<double> ratios;
        std::istringstream ss(ratios_csv);
        std::string item;
        while (std::getline(ss, item, ',')) ratios.push_back(std::stod(item));
        auto curve = sampled_density_curve(cloud.positions, ratios, seed);
        std::cerr << "density curve with seed " << seed << "\n";
        if (as_json) {
          nlohmann::json j;
          j["nn"] = nn;
          nlohmann::json rows = nlohmann::json::array();
          for (const auto& s : curve)
            rows.push_back({{"ratio", s.ratio}, {"nn", s.nn}, {"points", s.points}});
          j["curve"] = rows;
          std::cout << j.dump(2) << "\n";
        } else {
          std::cout << density_curve_csv(curve);
        }
      } else if (as_json) {
        nlohmann::json j;
        j["nn"] = nn;
        j["points"] = cloud.size();
        std::cout << j.dump(2) << "\n";
      } else {
        std::cout << "NN " << nn << " over " << cloud.size() << " points\n";
      }
      return 0;
    }

    if (rep->parsed()) {
      RateReport r = rate_report(read_file(input));
      std::cout << (as_json ? r.to_json() : r.to_text());
      return 0;
    }
  } catch (const CodecError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.kind() == ErrorKind::kIntegrity ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
